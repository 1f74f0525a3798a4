"""Independent certification of construction claims: hop-bounded stretch,
decomposition validity, orientation in-degree, and exact treewidth/arboricity
at toy sizes.

Stretch/hop checking runs k rounds of Bellman-Ford-style relaxation per
source, vectorized over batches of sources; it never consults construction
internals.  Steiner vertices participate as intermediate hops only.
"""

from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field

import numpy as np

from .core import HST, LineMetric, RootedTree, Spanner, close
from .treewidth import TreeDecomposition

INF = np.inf


@dataclass
class VerifyReport:
    check: str
    passed: bool
    measured: dict = field(default_factory=dict)
    counterexample: tuple | None = None

    def to_json(self) -> dict:
        out = {"check": self.check, "passed": self.passed, "measured": self.measured}
        if self.counterexample is not None:
            out["counterexample"] = list(self.counterexample)
        return out


def base_distances_from(base, s: int) -> np.ndarray:
    if isinstance(base, RootedTree):
        return base.distances_from(s)
    if isinstance(base, LineMetric):
        return np.abs(base.points - base.points[s])
    if isinstance(base, HST):
        return base.distances_from(s)
    raise TypeError(f"unsupported base metric {type(base)!r}")


def base_size(base) -> int:
    return base.n


class _EdgeIndex:
    """Directed edge arrays sorted by head, with reduceat group boundaries."""

    def __init__(self, s: Spanner):
        nv = s.num_vertices
        tails = np.concatenate([s.eu, s.ev])
        heads = np.concatenate([s.ev, s.eu])
        w = np.concatenate([s.ew, s.ew])
        order = np.argsort(heads, kind="stable")
        self.tails = tails[order]
        self.heads = heads[order]
        self.w = w[order]
        self.nv = nv
        boundary = np.flatnonzero(np.diff(self.heads)) + 1
        self.starts = np.concatenate([[0], boundary])
        self.group_heads = self.heads[self.starts] if len(self.heads) else np.empty(0, np.int64)

    def relax_rounds(self, sources: np.ndarray, k: int) -> np.ndarray:
        """Min-cost over <= k-edge walks from each source to every vertex."""
        S = len(sources)
        dist = np.full((S, self.nv), INF)
        dist[np.arange(S), sources] = 0.0
        if len(self.tails) == 0:
            return dist
        for _ in range(k):
            cand = dist[:, self.tails] + self.w
            grouped = np.minimum.reduceat(cand, self.starts, axis=1)
            upd = dist[:, self.group_heads]
            np.minimum(upd, grouped, out=upd)
            changed = upd < dist[:, self.group_heads]
            dist[:, self.group_heads] = upd
            if not changed.any():
                break
        return dist


def _sample_sources(n: int, m: int, seed) -> tuple[np.ndarray, int]:
    """Pick enough sources that full rows cover >= m ordered pairs."""
    rng = random.Random(seed)
    per_source = max(1, n - 1)
    count = min(n, max(1, math.ceil(m / per_source)))
    sources = rng.sample(range(n), count)
    return np.array(sorted(sources)), count * per_source


def verify_stretch_hop(s: Spanner, base, k: int, pairs="all", seed: int = 0,
                       stretch: float = 1.0, batch: int | None = None) -> VerifyReport:
    """Certify: every tested ordered pair has a <= k-hop path in the spanner of
    length == stretch-factor-bounded base distance (exact when stretch == 1).

    pairs: "all", or an int m meaning a seeded sample covering >= m pairs.
    """
    n = base_size(base)
    if s.n_base != n:
        raise ValueError("spanner/base size mismatch")
    if n <= 1:
        return VerifyReport("stretch_hop", True,
                            {"pairs": 0, "k": k, "max_stretch": 1.0, "seed": seed})
    idx = _EdgeIndex(s)
    if pairs == "all":
        sources = np.arange(n)
        pair_count = n * (n - 1)
    else:
        sources, pair_count = _sample_sources(n, int(pairs), seed)
    if batch is None:
        # keep the S x directed-edges temporaries around ~256 MB
        batch = max(1, int(3.2e7 // max(1, len(idx.tails))))
    max_stretch = 1.0
    for lo in range(0, len(sources), batch):
        chunk = sources[lo:lo + batch]
        got = idx.relax_rounds(chunk, k)[:, :n]
        want = np.stack([base_distances_from(base, int(u)) for u in chunk])
        rows = np.arange(len(chunk))
        want[rows, chunk] = 0.0
        got[rows, chunk] = 0.0
        finite = np.isfinite(got)
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = np.where((want > 0) & finite, got / np.maximum(want, 1e-300), 1.0)
        if ratio.size:
            max_stretch = max(max_stretch, float(np.max(ratio)))
        undershoot = got < want - 1e-9 * np.maximum(1.0, want)
        if stretch == 1.0:
            both_int = (got == np.floor(got)) & (want == np.floor(want)) & finite
            tol_ok = np.abs(got - want) <= 1e-9 * np.maximum.reduce(
                [np.ones_like(want), np.abs(want), np.where(finite, np.abs(got), 0.0)])
            bad = ~((got == want) | (~both_int & tol_ok & finite))
        else:
            limit = want * stretch
            bad = got > limit + 1e-9 * np.maximum(1.0, limit)
        bad |= undershoot
        bad[rows, chunk] = False
        if bad.any():
            i, v = np.argwhere(bad)[0]
            u = int(chunk[i])
            return VerifyReport("stretch_hop", False,
                                {"pairs": pair_count, "k": k, "seed": seed,
                                 "max_stretch": max_stretch},
                                (u, int(v), float(got[i, v]), float(want[i, v])))
    return VerifyReport("stretch_hop", True,
                        {"pairs": pair_count, "k": k, "seed": seed,
                         "max_stretch": max_stretch})


def verify_tree_decomposition(td: TreeDecomposition, s: Spanner) -> VerifyReport:
    """Vertex coverage, edge coverage, running intersection; reports width."""
    n = s.num_vertices
    bag_sets = [set(int(v) for v in td.bag(i)) for i in range(td.num_bags)]
    in_bags: dict[int, list[int]] = {}
    for i, bs in enumerate(bag_sets):
        for v in bs:
            in_bags.setdefault(v, []).append(i)
    for v in range(n):
        if v not in in_bags:
            return VerifyReport("tree_decomposition", False,
                                {"width": td.width}, ("uncovered-vertex", v))
    for u, v in zip(s.eu, s.ev):
        u, v = int(u), int(v)
        covered = any(v in bag_sets[i] for i in in_bags[u])
        if not covered:
            return VerifyReport("tree_decomposition", False,
                                {"width": td.width}, ("uncovered-edge", u, v))
    for v, bags in in_bags.items():
        links = sum(1 for b in bags
                    if td.parent[b] >= 0 and v in bag_sets[td.parent[b]])
        if links != len(bags) - 1:
            return VerifyReport("tree_decomposition", False,
                                {"width": td.width}, ("disconnected-vertex", v))
    return VerifyReport("tree_decomposition", True, {"width": td.width, "bags": td.num_bags})


def verify_orientation(s: Spanner) -> VerifyReport:
    """Max in-degree d of the edge orientation; arboricity <= d + 1 follows."""
    if s.num_edges and s.eorient is None:
        return VerifyReport("orientation", False, {}, ("missing-orientation",))
    deg = s.in_degrees()
    d = int(deg.max()) if len(deg) else 0
    return VerifyReport("orientation", True,
                        {"max_in_degree": d, "arboricity_bound": d + 1,
                         "edges": s.num_edges, "vertices": s.num_vertices})


def _adjacency_sets(n: int, edges) -> list[set[int]]:
    adj = [set() for _ in range(n)]
    for u, v in edges:
        if u != v:
            adj[u].add(v)
            adj[v].add(u)
    return adj


def exact_treewidth_small(n: int, edges, limit: int = 12) -> int:
    """Exact treewidth via elimination-order DP over vertex subsets."""
    if n > limit:
        raise ValueError(f"exact treewidth limited to n <= {limit}")
    if n == 0:
        return 0
    adj = [0] * n
    for u, v in edges:
        if u != v:
            adj[u] |= 1 << v
            adj[v] |= 1 << u
    full = (1 << n) - 1

    from functools import lru_cache

    @lru_cache(maxsize=None)
    def reach_close(v: int, eliminated: int) -> int:
        # neighbors of v in the graph where `eliminated` vertices were removed
        # with fill-in: vertices reachable from v through eliminated ones
        seen = 1 << v
        stack = [v]
        out = 0
        while stack:
            x = stack.pop()
            nb = adj[x] & ~seen
            while nb:
                b = nb & -nb
                nb ^= b
                u = b.bit_length() - 1
                seen |= b
                if (eliminated >> u) & 1:
                    stack.append(u)
                else:
                    out |= b
        return out

    @lru_cache(maxsize=None)
    def best(eliminated: int) -> int:
        if eliminated == full:
            return -1
        rest = full & ~eliminated
        res = n
        r = rest
        while r:
            b = r & -r
            r ^= b
            v = b.bit_length() - 1
            deg = bin(reach_close(v, eliminated)).count("1")
            res = min(res, max(deg, best(eliminated | b)))
        return res

    return best(0)


def exact_arboricity_small(n: int, edges, limit: int = 10) -> int:
    """Nash-Williams density maximum over all vertex subsets."""
    if n > limit:
        raise ValueError(f"exact arboricity limited to n <= {limit}")
    uniq = {(min(u, v), max(u, v)) for u, v in edges if u != v}
    if not uniq:
        return 0
    best = 1
    for mask in range(3, 1 << n):
        nh = bin(mask).count("1")
        if nh < 2:
            continue
        mh = sum(1 for u, v in uniq if (mask >> u) & 1 and (mask >> v) & 1)
        if mh:
            best = max(best, -(-mh // (nh - 1)))
    return best


def spanner_edge_list(s: Spanner):
    return list(zip((int(u) for u in s.eu), (int(v) for v in s.ev)))


def verify_edge_weights(s: Spanner, base) -> VerifyReport:
    """Every spanner edge weight equals the exact base distance (stretch-1
    edge property).  Steiner endpoints use their recorded positions."""
    if isinstance(base, LineMetric):
        pos = np.concatenate([base.points, [p.position for p in s.steiner]]) \
            if s.steiner else base.points

        def d(u, v):
            return abs(float(pos[u] - pos[v]))
    elif isinstance(base, RootedTree):
        def d(u, v):
            return base.distance(u, v)
    elif isinstance(base, HST):
        def d(u, v):
            return base.distance(u, v)
    else:
        raise TypeError("unsupported base")
    for u, v, w in zip(s.eu, s.ev, s.ew):
        exact = d(int(u), int(v))
        if not close(float(w), exact):
            return VerifyReport("edge_weights", False, {},
                                (int(u), int(v), float(w), exact))
    return VerifyReport("edge_weights", True, {"edges": s.num_edges})

"""Arboricity-bounded shortcuttings: the classical sparse construction, the
Steiner line constructions, line-metric and HST builders, and the bounded
height / general tree builders.

Every spanner here carries a full edge orientation; the maximum in-degree d
is the arboricity witness (arboricity <= d + 1).
"""

from __future__ import annotations

import math

import numpy as np

from .ackermann import inv_ackermann
from .core import HST, HSTNode, LineMetric, RootedTree, Spanner, SpannerBuilder
from .decompose import Scratch, centroid, heavy_light, subtree_distances_from, tree_partition
from .treewidth import _portal_edges, _split_components, virtual_tree


class SteinerBudgetError(ValueError):
    """Raised when a construction would exceed its per-gap Steiner budget."""


# ---------------------------------------------------------------------------
# classical O(n * alpha_k(n))-edge tree shortcutting


def _clique_oriented(t: RootedTree, verts, sb: SpannerBuilder, scr: Scratch):
    vs = list(verts)
    for i, u in enumerate(vs):
        if i + 1 == len(vs):
            break
        dist = subtree_distances_from(t, vs, u, scr)
        for j in range(i + 1, len(vs)):
            v = vs[j]
            sb.add(u, v, dist[v], head=(v if (i + j) % 2 else u))


def _classic_into(t: RootedTree, verts, k: int, sb: SpannerBuilder, scr: Scratch):
    m = len(verts)
    if m <= 1:
        return
    if k <= 1 or m <= 3:
        _clique_oriented(t, verts, sb, scr)
        return
    if k == 2:
        c = centroid(t, verts, scr, ordered=True)
        dist = subtree_distances_from(t, verts, c, scr)
        for v in verts:
            if v != c:
                sb.add(c, v, dist[v], head=v)
        for comp in _split_components(t, verts, c, scr):
            _classic_into(t, comp, 2, sb, scr)
        return
    b = max(2, inv_ackermann(k - 2, m))
    if b >= m:
        _classic_into(t, verts, k - 2, sb, scr)
        return
    part = tree_partition(t, b, verts, scr, ordered=True)
    if not part.X:
        _classic_into(t, verts, k - 2, sb, scr)
        return
    order, pidx, wts = virtual_tree(t, part.X)
    tx = RootedTree(pidx, [w if p >= 0 else 0.0 for p, w in zip(pidx, wts)], validate=False)
    sbx = SpannerBuilder(tx.n)
    _classic_into(tx, [int(v) for v in tx.order], k - 2, sbx, Scratch(tx.n))
    sx = sbx.freeze()
    for u, v, w, o in zip(sx.eu, sx.ev, sx.ew, sx.eorient):
        gu, gv = order[int(u)], order[int(v)]
        sb.add(gu, gv, float(w), head=(gv if o == 0 else gu))
    for comp, (up, lo) in zip(part.components, part.portals):
        _portal_edges(t, comp, up, lo, sb, scr)
        _classic_into(t, comp, k, sb, scr)


def classic_tree_shortcut(t: RootedTree, k: int) -> Spanner:
    """Stretch-1 hop-k shortcutting with O(n * alpha_k(n)) edges."""
    if k < 2:
        raise ValueError("k must be >= 2")
    sb = SpannerBuilder(t.n, meta={"construction": "classic", "k": k, "n": t.n})
    if t.n:
        _classic_into(t, [int(v) for v in t.order], k, sb, Scratch(t.n))
    return sb.freeze()


# ---------------------------------------------------------------------------
# Steiner spanners for line metrics


class _SteinerGaps:
    """Mints fresh Steiner points inside original gaps, respecting a per-gap
    slot budget.

    Star-shaped structure edges pass the gap next to their non-hub endpoint as
    `prefer` (at most O(1) such requests per gap per recursion level); wide
    clique edges rotate across the gaps between their endpoints.  One slot per
    gap stays reserved for the adjacent pair that can use no other gap."""

    def __init__(self, sb: SpannerBuilder, pts: np.ndarray, budget: int):
        self.sb = sb
        self.pts = pts
        self.budget = max(2, budget)
        self.used: dict[int, int] = {}
        self.rr = 0

    def _take(self, g: int, cap: int) -> int | None:
        u = self.used.get(g, 0)
        if u >= cap:
            return None
        self.used[g] = u + 1
        frac = (u + 1) / (self.budget + 1)
        pos = float(self.pts[g]) + (float(self.pts[g + 1]) - float(self.pts[g])) * frac
        return self.sb.new_steiner(position=pos)

    def host(self, i: int, j: int, prefer: int | None = None) -> int:
        if j == i + 1:
            s = self._take(i, self.budget)
            if s is None:
                raise SteinerBudgetError(f"gap {i} exhausted for adjacent pair")
            return s
        cap = self.budget - 1
        if prefer is not None and i <= prefer < j:
            s = self._take(prefer, cap)
            if s is not None:
                return s
        span = j - i - 1
        start = i + 1 + (self.rr % span)
        self.rr += 1
        for off in range(span):
            g = i + 1 + (start - i - 1 + off) % span
            s = self._take(g, cap)
            if s is not None:
                return s
        s = self._take(i, cap)
        if s is not None:
            return s
        raise SteinerBudgetError(f"no Steiner slot left between points {i} and {j}")

    def position(self, sid: int) -> float:
        return self.sb.steiner[sid - self.sb.n_base].position


def _cut_indices(m: int, block: int) -> list[int]:
    """Evenly spaced interior cut positions leaving ~`block`-point intervals
    whose sizes differ by at most one (rounded real positions)."""
    if m < 3:
        return []
    ncuts = max(1, round(m / (block + 1)))
    ncuts = min(ncuts, m - 2)
    cuts = []
    prev = 0
    for j in range(ncuts):
        c = round((j + 1) * m / (ncuts + 1))
        c = min(max(c, prev + 1), m - 2)
        if cuts and c <= cuts[-1]:
            continue
        cuts.append(c)
        prev = c
    return cuts


def _split_edge(sb: SpannerBuilder, pts, gaps: _SteinerGaps, i: int, j: int,
                prefer: int | None = None):
    """Edge {i, j} subdivided through a fresh Steiner point between them; the
    two half-weights sum exactly to the original distance."""
    i, j = (i, j) if i < j else (j, i)
    s = gaps.host(i, j, prefer)
    pos = gaps.position(s)
    wu = pos - float(pts[i])
    total = float(pts[j]) - float(pts[i])
    sb.add(i, s, wu, head=s)
    sb.add(s, j, total - wu, head=s)


def _toward(v: int, c: int) -> int:
    """Gap adjacent to point v on the side of c."""
    return v - 1 if v > c else v


def _steiner_rec(pts, idxs: list[int], kappa: int, gaps: _SteinerGaps, sb: SpannerBuilder):
    """Hop-2*kappa Steiner 1-spanner over the given point indices; every
    structural edge is split so original points keep in-degree 0."""
    m = len(idxs)
    if m <= 1:
        return
    if m == 2:
        _split_edge(sb, pts, gaps, idxs[0], idxs[1])
        return
    if kappa <= 1:
        for a in range(m):
            for b in range(a + 1, m):
                _split_edge(sb, pts, gaps, idxs[a], idxs[b])
        return
    if kappa == 2:
        mid = (m - 1) // 2
        c = idxs[mid]
        for v in idxs:
            if v != c:
                _split_edge(sb, pts, gaps, c, v, prefer=_toward(v, c))
        _steiner_rec(pts, idxs[:mid], 2, gaps, sb)
        _steiner_rec(pts, idxs[mid + 1:], 2, gaps, sb)
        return
    b = max(2, inv_ackermann(kappa - 2, m))
    cpos = _cut_indices(m, b)
    if not cpos:
        _steiner_rec(pts, idxs, kappa - 2, gaps, sb)
        return
    cuts = [idxs[p] for p in cpos]
    bounds = [-1] + cpos + [m]
    for seg in range(len(bounds) - 1):
        lo, hi = bounds[seg] + 1, bounds[seg + 1]
        interval = idxs[lo:hi]
        for p in interval:
            if seg > 0:
                _split_edge(sb, pts, gaps, cuts[seg - 1], p, prefer=_toward(p, cuts[seg - 1]))
            if seg < len(cuts):
                _split_edge(sb, pts, gaps, p, cuts[seg], prefer=_toward(p, cuts[seg]))
        _steiner_rec(pts, interval, kappa, gaps, sb)
    _steiner_rec(pts, cuts, kappa - 2, gaps, sb)


def steiner_line_hop2(line: LineMetric) -> Spanner:
    """Split clique: hop-2 Steiner 1-spanner, in-degree <= 2 everywhere."""
    n = line.n
    sb = SpannerBuilder(n, meta={"construction": "steiner2", "k": 2, "n": n})
    gaps = _SteinerGaps(sb, line.points, budget=max(1, n))
    for i in range(n):
        for j in range(i + 1, n):
            _split_edge(sb, line.points, gaps, i, j)
    return sb.freeze()


def steiner_line(line: LineMetric, k: int) -> Spanner:
    """Hop-2k Steiner 1-spanner with constant in-degree (Steiner points take
    2, originals 0).  Per-gap usage is O(alpha_k(n)): each recursion level
    needs a constant number of slots per gap, provisioned here as 4x + 2."""
    if k < 2:
        raise ValueError("k must be >= 2")
    n = line.n
    budget = max(2, 4 * inv_ackermann(k, max(2, n)) + 2)
    sb = SpannerBuilder(n, meta={"construction": "steiner", "k": k, "n": n,
                                 "budget_per_gap": budget})
    if n >= 2:
        gaps = _SteinerGaps(sb, line.points, budget)
        _steiner_rec(line.points, list(range(n)), k, gaps, sb)
    return sb.freeze()


# ---------------------------------------------------------------------------
# line metrics without external Steiner points


class _SegmentHosts:
    """Round-robin real-point hosts drawn from the segments between cuts."""

    def __init__(self, idxs: list[int], cpos: list[int]):
        self.segments: dict[int, list[int]] = {}
        bounds = [-1] + cpos + [len(idxs)]
        for seg in range(len(bounds) - 1):
            lo, hi = bounds[seg] + 1, bounds[seg + 1]
            self.segments[seg - 1] = idxs[lo:hi]
        self.ptr: dict[int, int] = {}

    def host_after(self, cut_seq: int) -> int | None:
        seg = self.segments.get(cut_seq)
        if not seg:
            return None
        p = self.ptr.get(cut_seq, 0)
        self.ptr[cut_seq] = p + 1
        return seg[p % len(seg)]


class _StructEmit:
    """Emits structure edges through real hosts, skipping pairs the cut/point
    star edges already provide and deduplicating repeated host choices."""

    def __init__(self, sb: SpannerBuilder, pts, seq_of: dict[int, int]):
        self.sb = sb
        self.pts = pts
        self.seq_of = seq_of
        self.seen: set[tuple[int, int]] = set()

    def _emit(self, u: int, v: int, head: int):
        key = (u, v) if u < v else (v, u)
        if key in self.seen:
            return
        self.seen.add(key)
        self.sb.add(u, v, abs(float(self.pts[v]) - float(self.pts[u])), head=head)

    def split(self, a: int, h: int | None, hseq: int, b: int):
        """Edge {a, b} via host h drawn from segment hseq (direct if absent).
        A half incident to a cut adjacent to the host's segment is already an
        interval star edge and is not re-emitted."""
        if h is None or h == a or h == b:
            self._emit(a, b, head=b)
            return
        if self.seq_of.get(a) not in (hseq, hseq + 1):
            self._emit(a, h, head=h)
        if self.seq_of.get(b) not in (hseq, hseq + 1):
            self._emit(h, b, head=h)


def _line_struct(cuts: list[int], kappa: int, hosts: _SegmentHosts,
                 em: _StructEmit):
    """Hop-2*kappa structure over the cut points; every structural edge runs
    through a real host point lying between its endpoints."""
    m = len(cuts)
    seq_of = em.seq_of
    if m <= 1:
        return
    if m == 2 or kappa <= 1:
        for a in range(m):
            for b in range(a + 1, m):
                s = seq_of[cuts[a]]
                em.split(cuts[a], hosts.host_after(s), s, cuts[b])
        return
    if kappa == 2:
        mid = (m - 1) // 2
        c = cuts[mid]
        for v in cuts:
            if v == c:
                continue
            near = seq_of[v] - 1 if v > c else seq_of[v]
            em.split(c, hosts.host_after(near), near, v)
        _line_struct(cuts[:mid], 2, hosts, em)
        _line_struct(cuts[mid + 1:], 2, hosts, em)
        return
    b = max(2, inv_ackermann(kappa - 2, m))
    cpos = _cut_indices(m, b)
    if not cpos:
        _line_struct(cuts, kappa - 2, hosts, em)
        return
    subcuts = [cuts[p] for p in cpos]
    bounds = [-1] + cpos + [m]
    for seg in range(len(bounds) - 1):
        lo, hi = bounds[seg] + 1, bounds[seg + 1]
        interval = cuts[lo:hi]
        for p in interval:
            if seg > 0:
                s = seq_of[p] - 1
                em.split(subcuts[seg - 1], hosts.host_after(s), s, p)
            if seg < len(subcuts):
                s = seq_of[p]
                em.split(p, hosts.host_after(s), s, subcuts[seg])
        _line_struct(interval, kappa, hosts, em)
    _line_struct(subcuts, kappa - 2, hosts, em)


def _line_rec(pts, idxs: list[int], kappa: int, sb: SpannerBuilder):
    m = len(idxs)
    if m <= 1:
        return
    if m <= 4:
        for a in range(m):
            for b in range(a + 1, m):
                sb.add(idxs[a], idxs[b], abs(float(pts[idxs[b]]) - float(pts[idxs[a]])),
                       head=(idxs[b] if (a + b) % 2 else idxs[a]))
        return
    blk = max(2, inv_ackermann(kappa, m))
    cpos = _cut_indices(m, blk)
    cuts = [idxs[p] for p in cpos]
    seq_of = {c: i for i, c in enumerate(cuts)}
    hosts = _SegmentHosts(idxs, cpos)
    bounds = [-1] + cpos + [m]
    for seg in range(len(bounds) - 1):
        lo, hi = bounds[seg] + 1, bounds[seg + 1]
        interval = idxs[lo:hi]
        for p in interval:
            if seg > 0:
                c = cuts[seg - 1]
                sb.add(c, p, abs(float(pts[p]) - float(pts[c])), head=p)
            if seg < len(cuts):
                c = cuts[seg]
                sb.add(c, p, abs(float(pts[c]) - float(pts[p])), head=p)
        _line_rec(pts, interval, kappa, sb)
    _line_struct(cuts, kappa, hosts, _StructEmit(sb, pts, seq_of))


def _line_centroid_rec(pts, lo: int, hi: int, sb: SpannerBuilder):
    m = hi - lo
    if m <= 1:
        return
    mid = lo + (m - 1) // 2
    for v in range(lo, hi):
        if v != mid:
            sb.add(mid, v, abs(float(pts[v]) - float(pts[mid])), head=v)
    _line_centroid_rec(pts, lo, mid, sb)
    _line_centroid_rec(pts, mid + 1, hi, sb)


def build_line(line: LineMetric, k: int) -> Spanner:
    """Stretch-1 hop-k spanner of a line with in-degree O(alpha_{k/2+1}(n));
    interval points double as the Steiner hosts (no minted vertices)."""
    if k < 2 or k % 2:
        raise ValueError("k must be an even integer >= 2")
    n = line.n
    sb = SpannerBuilder(n, meta={"construction": "line", "k": k, "n": n})
    if n >= 2:
        if k == 2:
            _line_centroid_rec(line.points, 0, n, sb)
        else:
            _line_rec(line.points, list(range(n)), (k - 2) // 2, sb)
    return sb.freeze()


# ---------------------------------------------------------------------------
# HST shortcutting


def _compress_chain(node: HSTNode) -> HSTNode:
    while not node.is_leaf and len(node.children) == 1:
        node = node.children[0]
    return node


def _hst_cut_subtrees(hst: HST, node: HSTNode, limit: int) -> list[HSTNode]:
    """Maximal proper descendant subtrees with at most `limit` leaves."""
    out = []
    stack = list(node.children)
    while stack:
        v = stack.pop()
        if hst.leafcount(v) <= limit:
            out.append(v)
        else:
            stack.extend(v.children)
    out.sort(key=lambda c: c.leaf_lo)
    return out


class _LeafPool:
    """Round-robin over the leaves of an HST subtree."""

    def __init__(self, hst: HST, node: HSTNode):
        self.leaves = hst.leaves_under(node)
        self.ptr = 0

    def next(self) -> int:
        h = self.leaves[self.ptr % len(self.leaves)]
        self.ptr += 1
        return h


def _hst_virtual(cuts: list[HSTNode]):
    """Virtual (branching) tree over disjoint cut subtrees.

    Returns (nodes, children, parent_of): indices 0..len(cuts)-1 are the cuts
    themselves; larger indices are lca nodes of the original HST.
    """

    def contains(a: HSTNode, b: HSTNode) -> bool:
        return a.leaf_lo <= b.leaf_lo and b.leaf_hi <= a.leaf_hi

    def lca_of(a: HSTNode, b: HSTNode) -> HSTNode:
        while not contains(a, b):
            a = a.parent
        return a

    nodes: list[HSTNode] = list(cuts)
    seen = {id(c) for c in cuts}
    for i in range(len(cuts) - 1):
        z = lca_of(cuts[i], cuts[i + 1])
        if id(z) not in seen:
            seen.add(id(z))
            nodes.append(z)
    order = sorted(range(len(nodes)), key=lambda i: (nodes[i].leaf_lo, -nodes[i].leaf_hi))
    parent_of: dict[int, int] = {}
    children: dict[int, list[int]] = {}
    stack: list[int] = []
    for i in order:
        while stack and not contains(nodes[stack[-1]], nodes[i]):
            stack.pop()
        if stack:
            parent_of[i] = stack[-1]
            children.setdefault(stack[-1], []).append(i)
        stack.append(i)
    return nodes, children, parent_of


class _HstEmit:
    """Deduplicating edge emitter for HST constructions (the gateway and hub
    roles can select the same leaf pair from different levels)."""

    def __init__(self, hst: HST, sb: SpannerBuilder):
        self.hst = hst
        self.sb = sb
        self.seen: set[tuple[int, int]] = set()

    def add(self, u: int, v: int, head: int) -> bool:
        if u == v:
            return False
        key = (u, v) if u < v else (v, u)
        if key in self.seen:
            return False
        self.seen.add(key)
        self.sb.add(u, v, self.hst.distance(u, v), head=head)
        return True


def _hst_rec(hst: HST, node: HSTNode, k: int, em: _HstEmit):
    node = _compress_chain(node)
    m = hst.leafcount(node)
    if m <= 1:
        return
    if m == 2:
        a, b = hst.leaves_under(node)
        em.add(a, b, head=b)
        return
    kappa = (k - 2) // 2
    limit = max(2, min(m - 1, inv_ackermann(kappa, m)))
    cuts = _hst_cut_subtrees(hst, node, limit)
    reps = [c.min_leaf for c in cuts]
    for c, rep in zip(cuts, reps):
        for x in hst.leaves_under(c):
            if x != rep:
                em.add(rep, x, head=x)
    if len(cuts) >= 2:
        if kappa <= 1:
            _hst_clique(hst, cuts, reps, em)
        else:
            _hst_gateways(hst, cuts, reps, em)
    for c in cuts:
        _hst_rec(hst, c, k, em)


def _hst_clique(hst: HST, cuts, reps, em: _HstEmit):
    """Split clique over cut representatives; hosts rotate through the first
    endpoint's subtree so long-edge in-degree spreads over its leaves."""
    pools = [_LeafPool(hst, c) for c in cuts]
    q = len(cuts)
    for i in range(q):
        for j in range(i + 1, q):
            h = pools[i].next()
            a, b = reps[i], reps[j]
            if h == a:
                h = pools[j].next()
                if h == b:
                    em.add(a, b, head=(b if (i + j) % 2 else a))
                    continue
                a, b = b, a
            em.add(a, h, head=h)
            em.add(h, b, head=h)


def _hst_gateways(hst: HST, cuts, reps, em: _HstEmit):
    """Gateway scheme: 4 hops between any two cut representatives, paying the
    top distance once (fan split-cliques at branching nodes + access edges)."""
    nodes, children, parent_of = _hst_virtual(cuts)
    pools: dict[int, _LeafPool] = {}

    def pool(i: int) -> _LeafPool:
        if i not in pools:
            pools[i] = _LeafPool(hst, nodes[i])
        return pools[i]

    for zi, kids in children.items():
        for a in range(len(kids)):
            g1 = nodes[kids[a]].min_leaf
            for b in range(a + 1, len(kids)):
                g2 = nodes[kids[b]].min_leaf
                h = pool(kids[a]).next()
                if h == g1:
                    h = pool(kids[b]).next()
                    if h == g2:
                        em.add(g1, g2, head=(g2 if (a + b) % 2 else g1))
                        continue
                    g1, g2 = g2, g1
                em.add(g1, h, head=h)
                em.add(h, g2, head=h)
    # access edges: rep reaches its branch gateway at every virtual ancestor
    # (the gateway of rep's branch below z is that branch's min leaf)
    for i, rep in enumerate(reps):
        cur = i
        while cur in parent_of:
            em.add(nodes[cur].min_leaf, rep, head=rep)
            cur = parent_of[cur]


def _hst_hop2(hst: HST, em: _HstEmit):
    """Hop-2 hub scheme (per-branch hubs).  Exact stretch 1+eps but in-degree
    grows with depth * degree; flat near-uniform HSTs force a near-clique."""
    for z in hst.nodes:
        if z.is_leaf:
            continue
        zleaves = hst.leaves_under(z)
        for br in z.children:
            hub = br.min_leaf
            for x in hst.leaves_under(br):
                if x != hub:
                    em.add(hub, x, head=x)
            for y in zleaves:
                pos = hst.leaf_node[y].leaf_lo
                if not (br.leaf_lo <= pos < br.leaf_hi):
                    em.add(hub, y, head=y)


def build_hst(hst: HST, k: int, eps: float) -> Spanner:
    """Spanner of the HST leaf metric: hop <= k, measured stretch <= 1 + 6*eps
    for separation 1/eps, in-degree tracking alpha_{k/2+1}(n) for k >= 4."""
    if k < 2 or k % 2:
        raise ValueError("k must be an even integer >= 2")
    if not (0 < eps < 1):
        raise ValueError("eps must lie in (0, 1)")
    hst.check_separation(1.0 / eps)
    delta = max((len(v.children) for v in hst.nodes if not v.is_leaf), default=0)
    sb = SpannerBuilder(hst.n, meta={"construction": "hst", "k": k, "n": hst.n,
                                     "eps": eps, "delta": delta})
    em = _HstEmit(hst, sb)
    if hst.n >= 2:
        if k == 2:
            _hst_hop2(hst, em)
        else:
            _hst_rec(hst, hst.root, k, em)
    return sb.freeze()


# ---------------------------------------------------------------------------
# bounded-height and general trees


def _bh_all_pairs(t: RootedTree, verts, sb: SpannerBuilder, scr: Scratch, stamp: int):
    mark, parent, wd = scr.mark, t.parent, t.wdepth
    for v in verts:
        a = int(parent[v])
        while a >= 0 and mark[a] == stamp:
            sb.add(a, v, float(wd[v] - wd[a]), head=v)
            a = int(parent[a])


def _bh_two_hop(t: RootedTree, verts, rd, sb: SpannerBuilder, scr: Scratch, stamp: int):
    """2-hop ancestor-descendant scheme: each vertex reaches its sqrt(h)
    nearest ancestors and all cut-level ancestors; in-degree O(sqrt(h))."""
    h = max(rd[v] for v in verts)
    ell = max(2, math.isqrt(h))
    mark, parent, wd = scr.mark, t.parent, t.wdepth
    for v in verts:
        a = int(parent[v])
        while a >= 0 and mark[a] == stamp:
            if rd[v] - rd[a] < ell or rd[a] % ell == 0:
                sb.add(a, v, float(wd[v] - wd[a]), head=v)
            a = int(parent[a])


def _bh_into(t: RootedTree, verts, kp: int, sb: SpannerBuilder, scr: Scratch):
    """Ancestor-descendant <= kp hops within the view; recursion on the
    contracted cut forest (kp - 3) and on the short bands (kp)."""
    m = len(verts)
    if m <= 1:
        return
    from .decompose import _mark
    stamp = _mark(t, verts, scr)
    root = verts[0]
    rd = {v: int(t.depth[v] - t.depth[root]) for v in verts}
    h = max(rd.values())
    if h == 0:
        return
    if kp == 1 or h <= 2:
        _bh_all_pairs(t, verts, sb, scr, stamp)
        return
    if kp in (2, 3) or h <= 4:
        _bh_two_hop(t, verts, rd, sb, scr, stamp)
        return
    ell = max(2, min(h - 1, math.ceil(h ** (3.0 / (kp + 2)))))
    mark, parent, wd = scr.mark, t.parent, t.wdepth
    is_cut = {v: (rd[v] % ell == 0 and rd[v] > 0) for v in verts}
    is_s = {v: False for v in verts}
    cuts = [v for v in verts if is_cut[v]]
    for c in cuts:
        is_s[int(parent[c])] = True
    for c in cuts:  # E_CS
        p = int(parent[c])
        sb.add(p, c, float(wd[c] - wd[p]), head=c)
    for v in verts:  # E_S: ell-1 nearest ancestors, up to the cut level above
        if not is_s[v]:
            continue
        a = int(parent[v])
        steps = 0
        while a >= 0 and mark[a] == stamp and steps < ell - 1:
            sb.add(a, v, float(wd[v] - wd[a]), head=v)
            steps += 1
            if is_cut[a]:
                break
            a = int(parent[a])
    ncut: dict[int, int | None] = {}
    for v in verts:  # E_C: nearest cut ancestor covers its band
        p = int(parent[v])
        if is_cut[v]:
            ncut[v] = v
        elif p >= 0 and mark[p] == stamp:
            ncut[v] = ncut[p]
        else:
            ncut[v] = None
        c = ncut[v]
        if c is not None and c != v and not is_s[v] and not is_cut[v]:
            sb.add(c, v, float(wd[v] - wd[c]), head=v)
    # contracted cut forest with parameter kp - 3
    cparent: dict[int, int | None] = {}
    for v in verts:
        if not is_cut[v]:
            continue
        a = int(parent[v])
        anc = None
        while a >= 0 and mark[a] == stamp:
            if is_cut[a]:
                anc = a
                break
            a = int(parent[a])
        cparent[v] = anc
    trees: dict[int, list[int]] = {}
    troot: dict[int, int] = {}
    for v in verts:
        if not is_cut[v]:
            continue
        troot[v] = v if cparent[v] is None else troot[cparent[v]]
        trees.setdefault(troot[v], []).append(v)
    for members in trees.values():
        if len(members) <= 1:
            continue
        lidx = {v: i for i, v in enumerate(members)}
        par = [lidx[cparent[v]] if cparent[v] is not None else -1 for v in members]
        wts = [float(wd[v] - wd[cparent[v]]) if cparent[v] is not None else 0.0
               for v in members]
        tx = RootedTree(par, wts, validate=False)
        sbx = SpannerBuilder(tx.n)
        _bh_into(tx, [int(x) for x in tx.order], kp - 3, sbx, Scratch(tx.n))
        sx = sbx.freeze()
        for u, v2, w, o in zip(sx.eu, sx.ev, sx.ew, sx.eorient):
            gu, gv = members[int(u)], members[int(v2)]
            sb.add(gu, gv, float(w), head=(gv if o == 0 else gu))
    # bands: components of the view minus (C u S), same parameter
    comp_of: dict[int, int] = {}
    comps: list[list[int]] = []
    for v in verts:
        if is_cut[v] or is_s[v]:
            continue
        p = int(parent[v])
        if p >= 0 and mark[p] == stamp and p in comp_of:
            ci = comp_of[p]
        else:
            ci = len(comps)
            comps.append([])
        comp_of[v] = ci
        comps[ci].append(v)
    for comp in comps:
        if len(comp) > 1:
            _bh_into(t, comp, kp, sb, scr)


def build_tree_bounded_height(t: RootedTree, kp: int) -> Spanner:
    """Ancestor-descendant pairs within kp hops (kp = 1 mod 3), any pair
    within 2*kp hops via the lca; in-degree O(h^{3/(kp+2)})."""
    if kp < 1 or kp % 3 != 1:
        raise ValueError("k' must be congruent to 1 mod 3")
    sb = SpannerBuilder(t.n, meta={"construction": "treeh", "k": 2 * kp, "kp": kp,
                                   "n": t.n, "height": t.height()})
    if t.n:
        _bh_into(t, [int(v) for v in t.order], kp, sb, Scratch(t.n))
    return sb.freeze()


def build_tree_general(t: RootedTree, k: int) -> Spanner:
    """General trees via heavy-light contraction: hop <= k (k = 4k'+4),
    in-degree O(log^{12/(k+4)} n)."""
    if k < 8:
        raise ValueError("k must be >= 8")
    eff_k = 4 * ((k - 4) // 4) + 4
    meta = {"construction": "tree", "k": k, "n": t.n}
    if eff_k != k:
        meta["effective_k"] = eff_k
        meta["warning"] = f"k={k} not of the form 4k'+4; built with k={eff_k}"
    kp = (eff_k - 4) // 4
    sb = SpannerBuilder(t.n, meta=meta)
    if t.n <= 1:
        return sb.freeze()
    paths, contracted, v2p = heavy_light(t)
    # per heavy path: hop-4 line structure plus direct edges to the path head
    for pverts in paths:
        head = pverts[0]
        base = float(t.wdepth[head])
        if len(pverts) >= 2:
            coords = np.array([float(t.wdepth[v]) - base for v in pverts])
            sub = SpannerBuilder(len(pverts))
            _line_rec(coords, list(range(len(pverts))), 1, sub)
            sx = sub.freeze()
            for u, v2, w, o in zip(sx.eu, sx.ev, sx.ew, sx.eorient):
                gu, gv = pverts[int(u)], pverts[int(v2)]
                if gu == head or gv == head:
                    continue  # identical edge emitted by the head star below
                sb.add(gu, gv, float(w), head=(gv if o == 0 else gu))
            for v in pverts[1:]:
                sb.add(head, v, float(t.wdepth[v]) - base, head=v)
    # contracted-tree ancestor structure, lifted edge by edge
    sbc = SpannerBuilder(contracted.n)
    _bh_into(contracted, [int(v) for v in contracted.order], kp, sbc,
             Scratch(contracted.n))
    sc = sbc.freeze()
    heads = [p[0] for p in paths]
    for u, v2, w, o in zip(sc.eu, sc.ev, sc.ew, sc.eorient):
        pu, pv = int(u), int(v2)
        if contracted.is_ancestor(pv, pu):
            pu, pv = pv, pu  # pu is the ancestor path
        r = heads[pv]
        a = int(t.parent[r])
        while v2p[a] != pu:
            a = int(t.parent[a])
        sb.add(a, r, float(t.wdepth[r] - t.wdepth[a]), head=(r if o == 0 else a))
    return sb.freeze()

"""Core tree/metric model: rooted trees, line metrics, HSTs, and spanners.

Vertex ids are dense integers 0..n-1.  Steiner vertices, when a construction
mints them, occupy a disjoint id range starting at n.  All types are immutable
after construction and safe for concurrent reads.
"""

from __future__ import annotations

import json
from array import array
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

REL_TOL = 1e-9


def close(a: float, b: float) -> bool:
    """Distance equality: exact for integers, relative 1e-9 otherwise."""
    if a == b:
        return True
    if float(a).is_integer() and float(b).is_integer():
        return False
    return abs(a - b) <= REL_TOL * max(1.0, abs(a), abs(b))


class RootedTree:
    """Weighted rooted tree; parent[root] == -1, weight[root] == 0.

    The induced metric is d(u, v) = weighted path length through the lca.
    """

    def __init__(self, parent, weight=None, validate: bool = True):
        self.parent = np.asarray(parent, dtype=np.int64)
        self.n = len(self.parent)
        if weight is None:
            weight = np.ones(self.n)
            if self.n:
                weight[np.flatnonzero(self.parent < 0)] = 0.0
        self.weight = np.asarray(weight, dtype=np.float64)
        if validate:
            self._validate()
        self._build()

    def _validate(self):
        if len(self.weight) != self.n:
            raise ValueError("parent/weight length mismatch")
        roots = np.flatnonzero(self.parent < 0)
        if self.n and len(roots) != 1:
            raise ValueError(f"expected exactly one root, found {len(roots)}")
        if np.any(self.weight < 0):
            raise ValueError("negative edge weight")
        if self.n and abs(self.weight[roots[0]]) != 0:
            raise ValueError("root weight must be 0")
        if np.any(self.parent >= self.n):
            raise ValueError("parent id out of range")

    def _build(self):
        n = self.n
        if n == 0:
            self.root = -1
            return
        self.root = int(np.flatnonzero(self.parent < 0)[0])
        # children in CSR form
        order = np.argsort(self.parent, kind="stable")
        first_child = np.searchsorted(self.parent, np.arange(n), side="left", sorter=order)
        last_child = np.searchsorted(self.parent, np.arange(n), side="right", sorter=order)
        self._csr_order = order
        self._csr_lo = first_child
        self._csr_hi = last_child
        # iterative preorder; also catches cycles (visited count != n)
        self.order = np.empty(n, dtype=np.int64)
        self.depth = np.zeros(n, dtype=np.int64)
        self.wdepth = np.zeros(n, dtype=np.float64)
        self.tin = np.zeros(n, dtype=np.int64)
        self.tout = np.zeros(n, dtype=np.int64)
        stack = [self.root]
        k = 0
        while stack:
            v = stack.pop()
            self.order[k] = v
            self.tin[v] = k
            k += 1
            p = self.parent[v]
            if p >= 0:
                self.depth[v] = self.depth[p] + 1
                self.wdepth[v] = self.wdepth[p] + self.weight[v]
            for c in self.children(v)[::-1]:
                stack.append(int(c))
        if k != n:
            raise ValueError("parent array is not a single connected tree")
        # tout as exclusive end of the preorder interval of the subtree
        sz = np.ones(n, dtype=np.int64)
        for v in self.order[::-1]:
            p = self.parent[v]
            if p >= 0:
                sz[p] += sz[v]
        self.subtree_size = sz
        self.tout = self.tin + sz
        self._up = None  # lazy binary-lifting table

    def children(self, v: int) -> np.ndarray:
        return self._csr_order[self._csr_lo[v]:self._csr_hi[v]]

    def is_ancestor(self, a: int, b: int) -> bool:
        """True iff a lies on the root path of b (a == b counts)."""
        self._check(a)
        self._check(b)
        return bool(self.tin[a] <= self.tin[b] and self.tout[b] <= self.tout[a])

    def _check(self, v: int):
        if not (0 <= v < self.n):
            raise ValueError(f"vertex id {v} out of range 0..{self.n - 1}")

    def _lifting(self):
        if self._up is None:
            levels = max(1, int(np.ceil(np.log2(max(2, self.n)))))
            up = np.empty((levels, self.n), dtype=np.int64)
            up[0] = np.where(self.parent < 0, np.arange(self.n), self.parent)
            for j in range(1, levels):
                up[j] = up[j - 1][up[j - 1]]
            self._up = up
        return self._up

    def lca(self, u: int, v: int) -> int:
        self._check(u)
        self._check(v)
        if self.is_ancestor(u, v):
            return u
        if self.is_ancestor(v, u):
            return v
        up = self._lifting()
        # lift u until its parent is an ancestor of v
        tinv, tin, tout = self.tin[v], self.tin, self.tout
        for j in range(len(up) - 1, -1, -1):
            w = up[j][u]
            if not (tin[w] <= tinv and tout[v] <= tout[w]):
                u = int(w)
        return int(self.parent[u])

    def distance(self, u: int, v: int) -> float:
        w = self.lca(u, v)
        return float(self.wdepth[u] + self.wdepth[v] - 2.0 * self.wdepth[w])

    def distances_from(self, s: int) -> np.ndarray:
        """Single-source metric distances, O(n), independent of lca tables."""
        self._check(s)
        dist = np.full(self.n, np.inf)
        dist[s] = 0.0
        stack = [s]
        while stack:
            v = stack.pop()
            dv = dist[v]
            p = self.parent[v]
            if p >= 0 and dist[p] == np.inf:
                dist[p] = dv + self.weight[v]
                stack.append(int(p))
            for c in self.children(v):
                c = int(c)
                if dist[c] == np.inf:
                    dist[c] = dv + self.weight[c]
                    stack.append(c)
        return dist

    def height(self) -> int:
        return int(self.depth.max()) if self.n else 0

    def to_json(self) -> dict:
        parent = [int(p) for p in self.parent]
        weight = [float(w) if not float(w).is_integer() else int(w) for w in self.weight]
        return {"n": self.n, "parent": parent, "weight": weight}

    @classmethod
    def from_json(cls, obj: dict) -> "RootedTree":
        if obj.get("n") != len(obj["parent"]):
            raise ValueError("tree JSON: n does not match parent length")
        return cls(obj["parent"], obj["weight"])


def tree_distance(t: RootedTree, u: int, v: int) -> float:
    return t.distance(u, v)


def lca(t: RootedTree, u: int, v: int) -> int:
    return t.lca(u, v)


def is_ancestor(t: RootedTree, a: int, b: int) -> bool:
    return t.is_ancestor(a, b)


class LineMetric:
    """Points on a line, strictly increasing coordinates."""

    def __init__(self, points, validate: bool = True):
        self.points = np.asarray(points, dtype=np.float64)
        self.n = len(self.points)
        if validate and self.n > 1 and not np.all(np.diff(self.points) > 0):
            raise ValueError("line coordinates must be strictly increasing")

    def distance(self, i: int, j: int) -> float:
        return abs(float(self.points[i] - self.points[j]))

    def to_json(self) -> dict:
        pts = [float(p) if not float(p).is_integer() else int(p) for p in self.points]
        return {"points": pts}

    @classmethod
    def from_json(cls, obj: dict) -> "LineMetric":
        return cls(obj["points"])


class HSTNode:
    __slots__ = ("gamma", "children", "point", "idx", "leaf_lo", "leaf_hi", "min_leaf", "parent")

    def __init__(self, gamma: float = 0.0, children=None, point: int = -1):
        self.gamma = gamma
        self.children = children or []
        self.point = point          # >= 0 only at leaves
        self.idx = -1
        self.leaf_lo = self.leaf_hi = -1
        self.min_leaf = -1
        self.parent = None

    @property
    def is_leaf(self) -> bool:
        return self.point >= 0


class HST:
    """Hierarchical well-separated tree.  Leaves are the metric points and the
    leaf metric is d(u, v) = gamma of the lowest common ancestor."""

    def __init__(self, root: HSTNode, validate: bool = True):
        self.root = root
        self.nodes: list[HSTNode] = []
        self.leaf_order: list[int] = []     # point ids in DFS order
        self._index()
        self.n = len(self.leaf_order)
        if validate:
            self._validate()

    def _index(self):
        self.nodes = []
        stack = [(self.root, None, False)]
        post = []
        while stack:
            node, parent, done = stack.pop()
            if done:
                node.leaf_hi = len(self.leaf_order)
                node.min_leaf = min((c.min_leaf for c in node.children), default=node.point)
                continue
            node.parent = parent
            node.idx = len(self.nodes)
            self.nodes.append(node)
            node.leaf_lo = len(self.leaf_order)
            if node.is_leaf:
                self.leaf_order.append(node.point)
                node.leaf_hi = node.leaf_lo + 1
                node.min_leaf = node.point
            else:
                stack.append((node, parent, True))
                for c in reversed(node.children):
                    stack.append((c, node, False))
        self.leaf_node = {}
        for node in self.nodes:
            if node.is_leaf:
                if node.point in self.leaf_node:
                    raise ValueError(f"duplicate leaf point {node.point}")
                self.leaf_node[node.point] = node

    def _validate(self):
        if sorted(self.leaf_order) != list(range(self.n)):
            raise ValueError("leaf points must be exactly 0..n-1")
        for node in self.nodes:
            if not node.is_leaf:
                if node.gamma <= 0:
                    raise ValueError("internal node label must be > 0")
                if not node.children:
                    raise ValueError("internal node without children")
                for c in node.children:
                    if not c.is_leaf and c.gamma > node.gamma:
                        raise ValueError("child label exceeds parent label")

    def check_separation(self, s: float, delta: int | None = None):
        """Verify the (s, delta)-HST conditions; raises on violation."""
        for node in self.nodes:
            if node.is_leaf:
                continue
            if delta is not None and len(node.children) > delta:
                raise ValueError(f"degree {len(node.children)} exceeds delta={delta}")
            for c in node.children:
                if not c.is_leaf and node.gamma + REL_TOL * node.gamma < s * c.gamma:
                    raise ValueError("separation violated")

    def leaves_under(self, node: HSTNode) -> list[int]:
        return self.leaf_order[node.leaf_lo:node.leaf_hi]

    def leafcount(self, node: HSTNode) -> int:
        return node.leaf_hi - node.leaf_lo

    def lca_node(self, p: int, q: int) -> HSTNode:
        a, b = self.leaf_node[p], self.leaf_node[q]
        # walk up by DFS intervals
        while not (a.leaf_lo <= b.leaf_lo and b.leaf_hi <= a.leaf_hi):
            a = a.parent
        return a

    def distance(self, p: int, q: int) -> float:
        if p == q:
            return 0.0
        return float(self.lca_node(p, q).gamma)

    def distances_from(self, p: int) -> np.ndarray:
        """Leaf-metric distances from point p to every point, O(n)."""
        out = np.zeros(self.n)
        leaves = np.array(self.leaf_order)
        node = self.leaf_node[p]
        while node.parent is not None:
            up = node.parent
            sel = np.r_[leaves[up.leaf_lo:node.leaf_lo], leaves[node.leaf_hi:up.leaf_hi]]
            out[sel] = up.gamma
            node = up
        return out

    def to_json(self) -> dict:
        def rec(node):
            if node.is_leaf:
                return {"point": node.point}
            g = float(node.gamma)
            return {"gamma": int(g) if g.is_integer() else g,
                    "children": [rec(c) for c in node.children]}
        return rec(self.root)

    @classmethod
    def from_json(cls, obj: dict) -> "HST":
        def rec(o):
            if "point" in o:
                return HSTNode(point=int(o["point"]))
            return HSTNode(gamma=float(o["gamma"]), children=[rec(c) for c in o["children"]])
        return cls(rec(obj))


@dataclass
class SteinerPoint:
    """Auxiliary spanner vertex: never a query endpoint, only a hop."""
    id: int
    position: float | None = None   # line constructions: coordinate
    host: int | None = None         # HST constructions: subtree vertex it shadows

    def to_json(self) -> dict:
        d = {"id": self.id}
        if self.position is not None:
            d["position"] = self.position
        if self.host is not None:
            d["host"] = self.host
        return d


class Spanner:
    """Edge set over base-metric vertices (plus optional Steiner points).

    Edges carry exact base distances and an orientation; orientation value 0
    means u->v (in-degree lands at v), 1 means v->u.
    """

    def __init__(self, n_base: int, eu, ev, ew, eorient, steiner=None, meta=None):
        self.n_base = n_base
        self.eu = np.asarray(eu, dtype=np.int64)
        self.ev = np.asarray(ev, dtype=np.int64)
        self.ew = np.asarray(ew, dtype=np.float64)
        self.eorient = np.asarray(eorient, dtype=np.int8)
        self.steiner: list[SteinerPoint] = steiner or []
        self.meta = meta or {}

    @property
    def num_edges(self) -> int:
        return len(self.eu)

    @property
    def num_vertices(self) -> int:
        return self.n_base + len(self.steiner)

    def in_degrees(self) -> np.ndarray:
        deg = np.zeros(self.num_vertices, dtype=np.int64)
        heads = np.where(self.eorient == 0, self.ev, self.eu)
        np.add.at(deg, heads, 1)
        return deg

    def degrees(self) -> np.ndarray:
        deg = np.zeros(self.num_vertices, dtype=np.int64)
        np.add.at(deg, self.eu, 1)
        np.add.at(deg, self.ev, 1)
        return deg

    def check_simple(self):
        """No self-loops, no duplicate undirected edges."""
        if np.any(self.eu == self.ev):
            raise ValueError("self-loop in spanner")
        a = np.minimum(self.eu, self.ev)
        b = np.maximum(self.eu, self.ev)
        key = a * self.num_vertices + b
        if len(np.unique(key)) != len(key):
            raise ValueError("duplicate undirected edge in spanner")

    def to_json(self) -> dict:
        edges = [[int(u), int(v), float(w) if not float(w).is_integer() else int(w), int(o)]
                 for u, v, w, o in zip(self.eu, self.ev, self.ew, self.eorient)]
        return {
            "edges": edges,
            "meta": dict(self.meta, n_base=self.n_base),
            "orientation": [int(o) for o in self.eorient],
            "steiner": [s.to_json() for s in self.steiner],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Spanner":
        edges = obj["edges"]
        eu = [e[0] for e in edges]
        ev = [e[1] for e in edges]
        ew = [e[2] for e in edges]
        eo = [e[3] for e in edges]
        meta = dict(obj.get("meta", {}))
        n_base = meta.pop("n_base")
        steiner = [SteinerPoint(s["id"], s.get("position"), s.get("host"))
                   for s in obj.get("steiner", [])]
        return cls(n_base, eu, ev, ew, eo, steiner, meta)


class SpannerBuilder:
    """Append-only edge accumulator; freeze() emits an immutable Spanner."""

    def __init__(self, n_base: int, meta=None):
        self.n_base = n_base
        self._eu = array("q")
        self._ev = array("q")
        self._ew = array("d")
        self._eo = array("b")
        self.steiner: list[SteinerPoint] = []
        self.meta = dict(meta or {})

    def add(self, u: int, v: int, w: float, head: int | None = None):
        """Add edge {u, v}; `head` is the endpoint charged with in-degree."""
        if u == v:
            raise ValueError("self-loop")
        self._eu.append(u)
        self._ev.append(v)
        self._ew.append(w)
        self._eo.append(0 if (head is None or head == v) else 1)

    def new_steiner(self, position: float | None = None, host: int | None = None) -> int:
        sid = self.n_base + len(self.steiner)
        self.steiner.append(SteinerPoint(sid, position, host))
        return sid

    @property
    def num_edges(self) -> int:
        return len(self._eu)

    def freeze(self) -> Spanner:
        return Spanner(self.n_base, np.frombuffer(self._eu, dtype=np.int64).copy()
                       if self._eu else np.empty(0, dtype=np.int64),
                       np.frombuffer(self._ev, dtype=np.int64).copy()
                       if self._ev else np.empty(0, dtype=np.int64),
                       np.frombuffer(self._ew, dtype=np.float64).copy()
                       if self._ew else np.empty(0),
                       np.frombuffer(self._eo, dtype=np.int8).copy()
                       if self._eo else np.empty(0, dtype=np.int8),
                       self.steiner, self.meta)


def load_instance(path: str):
    """Load a tree/line/HST instance from its canonical JSON file."""
    with open(path) as f:
        obj = json.load(f)
    return instance_from_json(obj)


def instance_from_json(obj: dict):
    if "parent" in obj:
        return RootedTree.from_json(obj)
    if "points" in obj:
        return LineMetric.from_json(obj)
    if "gamma" in obj or "point" in obj:
        return HST.from_json(obj)
    raise ValueError("unrecognized instance JSON")


def dump_json(obj: dict, path: str):
    with open(path, "w") as f:
        json.dump(obj, f, separators=(",", ":"), sort_keys=True)
        f.write("\n")

"""Treewidth-bounded shortcuttings: hop-2, hop-3, and hop-k (k >= 4).

Every builder returns a stretch-1 spanner together with a tree-decomposition
witness.  The hop-3 recursion is also exposed as a call structure
(`hop3_calls`) so the routing scheme can be built on exactly the same spanner.
"""

from __future__ import annotations

import math
from array import array
from dataclasses import dataclass, field

import numpy as np

from .core import RootedTree, Spanner, SpannerBuilder
from .decompose import (Scratch, order_subset, subtree_distances_from,
                        tree_partition, centroid)


class _TDNode:
    """Lazily-assembled decomposition fragment.

    bags/parent_of describe a local bag tree (exactly one parent_of == -1);
    each child fragment hooks onto a local bag and has `extra` vertices added
    to every bag in its subtree.
    """
    __slots__ = ("bags", "parent_of", "children")

    def __init__(self, bags, parent_of=None):
        self.bags = bags
        self.parent_of = parent_of if parent_of is not None else [-1] * len(bags)
        self.children: list[tuple["_TDNode", int, tuple[int, ...]]] = []


class TreeDecomposition:
    """Bags stored flat: bag i = flat[offsets[i]:offsets[i+1]]."""

    def __init__(self, flat, offsets, parent):
        self.flat = np.asarray(flat, dtype=np.int64)
        self.offsets = np.asarray(offsets, dtype=np.int64)
        self.parent = np.asarray(parent, dtype=np.int64)

    @classmethod
    def from_node(cls, root: _TDNode) -> "TreeDecomposition":
        flat = array("q")
        offsets = array("q", [0])
        parent = array("q")
        stack = [(root, -1, ())]
        while stack:
            node, hook, inherited = stack.pop()
            base = len(parent)
            for i, bag in enumerate(node.bags):
                p = node.parent_of[i]
                parent.append(hook if p < 0 else base + p)
                merged = sorted(set(bag).union(inherited))
                flat.extend(merged)
                offsets.append(len(flat))
            for child, hidx, extra in node.children:
                stack.append((child, base + hidx, inherited + tuple(e for e in extra
                                                                    if e is not None)))
        return cls(np.frombuffer(flat, dtype=np.int64).copy() if flat else np.empty(0, np.int64),
                   np.frombuffer(offsets, dtype=np.int64).copy(),
                   np.frombuffer(parent, dtype=np.int64).copy() if parent else np.empty(0, np.int64))

    @property
    def num_bags(self) -> int:
        return len(self.parent)

    def bag(self, i: int) -> np.ndarray:
        return self.flat[self.offsets[i]:self.offsets[i + 1]]

    @property
    def width(self) -> int:
        if self.num_bags == 0:
            return 0
        return int(np.max(np.diff(self.offsets))) - 1

    def to_json(self) -> dict:
        return {"bags": [[int(v) for v in self.bag(i)] for i in range(self.num_bags)],
                "parent": [int(p) for p in self.parent]}

    @classmethod
    def from_json(cls, obj: dict) -> "TreeDecomposition":
        flat = array("q")
        offsets = array("q", [0])
        for bag in obj["bags"]:
            flat.extend(bag)
            offsets.append(len(flat))
        return cls(np.frombuffer(flat, dtype=np.int64).copy() if flat else np.empty(0, np.int64),
                   np.frombuffer(offsets, dtype=np.int64).copy(), obj["parent"])


def virtual_tree(t: RootedTree, X: list[int]):
    """Induced (lca-closed) auxiliary tree on X.

    Returns (order, parent_idx, weight): order is X sorted top-first,
    parent_idx[i] indexes the nearest X-ancestor (-1 for the single root), and
    weight[i] is the exact tree distance to it.  Requires X lca-closed, which
    the bounded-portal partition guarantees.
    """
    order = order_subset(t, X)
    idx = {v: i for i, v in enumerate(order)}
    parent_idx = []
    weight = []
    stack: list[int] = []
    for v in order:
        while stack and not t.is_ancestor(stack[-1], v):
            stack.pop()
        if stack:
            p = stack[-1]
            parent_idx.append(idx[p])
            weight.append(float(t.wdepth[v] - t.wdepth[p]))
        else:
            parent_idx.append(-1)
            weight.append(0.0)
        stack.append(v)
    return order, parent_idx, weight


def _ell3(n: int) -> int:
    if n < 16:
        return max(2, n)  # whole-tree clique below the loglog guard
    return max(2, math.ceil(math.log2(n) / math.log2(math.log2(n))))


def _ell_k(k: int, n: int) -> int:
    ln = math.log2(max(2, n))
    if k % 2 == 0:
        logell = (k / (k - 2)) ** ((k - 2) / 2) * ln ** ((k - 2) / k)
    else:
        lln = math.log2(max(2.0, ln))
        logell = (k / (k - 2)) ** ((k - 2) / 2) * (ln / lln) ** ((k - 2) / k)
    return max(2, math.ceil(2 ** logell))


def _clique_edges(t: RootedTree, verts, sb: SpannerBuilder, scr: Scratch):
    """All-pairs edges within a small connected view, exact distances."""
    vs = list(verts)
    for i, u in enumerate(vs):
        if i + 1 == len(vs):
            break
        dist = subtree_distances_from(t, vs, u, scr)
        for v in vs[i + 1:]:
            sb.add(u, v, dist[v], head=v)


def _x_clique_edges(t: RootedTree, order, parent_idx, weight, sb: SpannerBuilder):
    """Clique on an lca-closed set, distances via its auxiliary tree."""
    m = len(order)
    depth = [0.0] * m
    anc: list[list[int]] = [[] for _ in range(m)]
    for i in range(m):
        p = parent_idx[i]
        if p >= 0:
            depth[i] = depth[p] + weight[i]
            anc[i] = anc[p] + [p]
    ancset = [set(a) | {i} for i, a in enumerate(anc)]
    for i in range(m):
        for j in range(i + 1, m):
            if i in ancset[j]:
                d = depth[j] - depth[i]
            elif j in ancset[i]:
                d = depth[i] - depth[j]
            else:
                w = next(a for a in reversed(anc[j]) if a in ancset[i])
                d = depth[i] + depth[j] - 2 * depth[w]
            sb.add(order[i], order[j], d, head=order[j])


def _portal_edges(t: RootedTree, comp, upper, lower, sb: SpannerBuilder, scr: Scratch):
    """Connect both portals of a component to every component vertex."""
    if upper is not None:
        wd_up = float(t.wdepth[upper])
        for v in comp:
            sb.add(upper, v, float(t.wdepth[v]) - wd_up, head=v)
    if lower is not None and lower != upper:
        dist = subtree_distances_from(t, comp, lower, scr)
        for v in comp:
            sb.add(lower, v, dist[v], head=v)


def _split_components(t: RootedTree, verts, removed: int, scr: Scratch):
    """Components of a view minus one vertex, each top-first."""
    from .decompose import _mark
    stamp = _mark(t, verts, scr)
    scr.mark[removed] = 0
    comp_of = {}
    comps: list[list[int]] = []
    parent, mark = t.parent, scr.mark
    for v in verts:
        if v == removed:
            continue
        p = parent[v]
        if p >= 0 and mark[p] == stamp:
            ci = comp_of[p]
        else:
            ci = len(comps)
            comps.append([])
        comp_of[v] = ci
        comps[ci].append(v)
    return comps


def _hop2_into(t: RootedTree, verts, sb: SpannerBuilder, scr: Scratch) -> _TDNode:
    m = len(verts)
    if m == 1:
        return _TDNode([[verts[0]]])
    c = centroid(t, verts, scr, ordered=True)
    dist = subtree_distances_from(t, verts, c, scr)
    for v in verts:
        if v != c:
            sb.add(c, v, dist[v], head=v)
    node = _TDNode([[c]])
    for comp in _split_components(t, verts, c, scr):
        node.children.append((_hop2_into(t, comp, sb, scr), 0, (c,)))
    return node


def build_hop2(t: RootedTree) -> tuple[Spanner, TreeDecomposition]:
    """Centroid-star recursion: hop-diameter 2, width <= ceil(log2 n)."""
    sb = SpannerBuilder(t.n, meta={"construction": "tw2", "k": 2, "n": t.n})
    scr = Scratch(t.n)
    if t.n == 0:
        return sb.freeze(), TreeDecomposition.from_node(_TDNode([[]]))
    node = _hop2_into(t, [int(v) for v in t.order], sb, scr)
    return sb.freeze(), TreeDecomposition.from_node(node)


@dataclass
class Hop3Call:
    """One recursive call of the hop-3 construction."""
    id: int
    parent: int
    clique: list[int]                 # X (partition call) or all vertices (base)
    is_base: bool
    comps: list[list[int]] = field(default_factory=list)
    portals: list[tuple[int | None, int | None]] = field(default_factory=list)


def hop3_calls(t: RootedTree, verts=None, scratch: Scratch | None = None):
    """Iterate the hop-3 recursion in preorder; shared by the spanner builder
    and the routing scheme so both see identical structure."""
    scr = scratch or Scratch(t.n)
    if verts is None:
        verts = [int(v) for v in t.order]
    n0 = len(verts)
    ell3 = _ell3(n0)
    base_threshold = n0 if n0 < 16 else ell3
    calls: list[Hop3Call] = []
    stack = [(verts, -1)]
    while stack:
        vs, par = stack.pop()
        cid = len(calls)
        m = len(vs)
        if m <= base_threshold:
            calls.append(Hop3Call(cid, par, list(vs), True))
            continue
        part = tree_partition(t, math.ceil(m / ell3), vs, scr, ordered=True)
        call = Hop3Call(cid, par, part.X, False, part.components, part.portals)
        calls.append(call)
        for comp in reversed(part.components):
            stack.append((comp, cid))
    # re-establish preorder parent/child consistency: stack pops give preorder
    return calls, ell3


def _hop3_into(t: RootedTree, verts, sb: SpannerBuilder, scr: Scratch) -> _TDNode:
    calls, ell3 = hop3_calls(t, verts, scr)
    sb.meta.setdefault("ell3", ell3)
    nodes: dict[int, _TDNode] = {}
    pending_children: dict[int, list] = {}
    for call in calls:
        if call.is_base:
            _clique_edges(t, call.clique, sb, scr)
            nodes[call.id] = _TDNode([sorted(call.clique)])
        else:
            order, pidx, wts = virtual_tree(t, call.clique)
            _x_clique_edges(t, order, pidx, wts, sb)
            for comp, (up, lo) in zip(call.comps, call.portals):
                _portal_edges(t, comp, up, lo, sb, scr)
            nodes[call.id] = _TDNode([sorted(call.clique)])
        if call.parent >= 0:
            pending_children.setdefault(call.parent, []).append(call.id)
    # attach children: comp order matches child call order (preorder)
    for call in calls:
        kids = pending_children.get(call.id, [])
        for comp_idx, kid in enumerate(kids):
            up, lo = call.portals[comp_idx]
            nodes[call.id].children.append((nodes[kid], 0, (up, lo)))
    return nodes[calls[0].id]


def build_hop3(t: RootedTree) -> tuple[Spanner, TreeDecomposition]:
    """Partition/clique recursion: hop-diameter 3, width O(log n / loglog n)."""
    sb = SpannerBuilder(t.n, meta={"construction": "tw3", "k": 3, "n": t.n})
    scr = Scratch(t.n)
    if t.n == 0:
        return sb.freeze(), TreeDecomposition.from_node(_TDNode([[]]))
    node = _hop3_into(t, [int(v) for v in t.order], sb, scr)
    return sb.freeze(), TreeDecomposition.from_node(node)


def _build_into(t: RootedTree, verts, k: int, sb: SpannerBuilder, scr: Scratch) -> _TDNode:
    if k <= 1:
        raise ValueError("hop parameter must be >= 2")
    if k == 2:
        return _hop2_into(t, verts, sb, scr)
    if k == 3:
        return _hop3_into(t, verts, sb, scr)
    return _hopk_into(t, verts, k, sb, scr)


def _hopk_into(t: RootedTree, verts, k: int, sb: SpannerBuilder, scr: Scratch) -> _TDNode:
    n0 = len(verts)
    ell = _ell_k(k, n0)

    def rec(vs) -> _TDNode:
        m = len(vs)
        if m <= max(ell, 3):
            return _build_into(t, vs, k - 2, sb, scr)
        part = tree_partition(t, math.ceil(m / ell), vs, scr, ordered=True)
        # interconnect X by a fresh (k-2)-construction on the auxiliary tree
        order, pidx, wts = virtual_tree(t, part.X)
        tx = RootedTree(pidx, [w if p >= 0 else 0.0 for p, w in zip(pidx, wts)],
                        validate=False)
        sbx = SpannerBuilder(tx.n)
        node_x = _build_into(tx, [int(v) for v in tx.order], k - 2, sbx, Scratch(tx.n))
        sx = sbx.freeze()
        for u, v, w, o in zip(sx.eu, sx.ev, sx.ew, sx.eorient):
            gu, gv = order[int(u)], order[int(v)]
            sb.add(gu, gv, float(w), head=(gv if o == 0 else gu))
        tdx = TreeDecomposition.from_node(node_x)
        bags = [[order[int(v)] for v in tdx.bag(i)] for i in range(tdx.num_bags)]
        call_node = _TDNode(bags, [int(p) for p in tdx.parent])
        bag_sets = [set(b) for b in bags]
        for comp, (up, lo) in zip(part.components, part.portals):
            _portal_edges(t, comp, up, lo, sb, scr)
            child = rec(comp)
            want = {p for p in (up, lo) if p is not None}
            hook = next(i for i, bs in enumerate(bag_sets) if want <= bs)
            call_node.children.append((child, hook, (up, lo)))
        return call_node

    return rec(verts)


def build_hopk(t: RootedTree, k: int) -> tuple[Spanner, TreeDecomposition]:
    """Hop-k construction for k >= 4; recursion lowers k by 2 down to 2 or 3."""
    if k < 4:
        raise ValueError("build_hopk requires k >= 4 (use build_hop2/build_hop3)")
    sb = SpannerBuilder(t.n, meta={"construction": "twk", "k": k, "n": t.n})
    scr = Scratch(t.n)
    if t.n == 0:
        return sb.freeze(), TreeDecomposition.from_node(_TDNode([[]]))
    node = _hopk_into(t, [int(v) for v in t.order], k, sb, scr)
    return sb.freeze(), TreeDecomposition.from_node(node)

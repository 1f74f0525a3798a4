"""Structural decompositions: centroids, the bounded-portal tree partition,
and heavy-light decomposition.

Internal helpers operate on *views*: a connected subtree given as a vertex
list in top-first order (every vertex preceded by its in-view parent), plus a
shared Scratch of stamped arrays, so recursive constructions never allocate
per-call O(n) state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import RootedTree


class Scratch:
    """Reusable stamped work arrays for subtree-view computations."""

    def __init__(self, n: int):
        self.n = n
        self.mark = [0] * n
        self.stamp = 0
        self.sz = [0] * n
        self.aux = [0] * n
        self.aux2 = [0] * n
        self.dist = [0.0] * n

    def new_stamp(self) -> int:
        self.stamp += 1
        return self.stamp


def order_subset(t: RootedTree, subset) -> list[int]:
    """Sort a vertex subset top-first (by preorder index)."""
    return sorted(subset, key=lambda v: t.tin[v])


def _mark(t: RootedTree, verts, scr: Scratch) -> int:
    stamp = scr.new_stamp()
    mark = scr.mark
    for v in verts:
        mark[v] = stamp
    return stamp


def _local_root_count(t: RootedTree, verts, scr: Scratch, stamp: int) -> int:
    parent, mark = t.parent, scr.mark
    return sum(1 for v in verts if parent[v] < 0 or mark[parent[v]] != stamp)


def centroid(t: RootedTree, vertex_subset, scratch: Scratch | None = None,
             ordered: bool = False) -> int:
    """Vertex of the (connected) subset minimizing the maximum component size
    after its removal; ties broken by smallest id."""
    scr = scratch or Scratch(t.n)
    verts = list(vertex_subset) if ordered else order_subset(t, vertex_subset)
    if not verts:
        raise ValueError("empty subset")
    stamp = _mark(t, verts, scr)
    if _local_root_count(t, verts, scr, stamp) != 1:
        raise ValueError("subset is not connected")
    m = len(verts)
    parent, mark, sz, mcs = t.parent, scr.mark, scr.sz, scr.aux
    for v in verts:
        sz[v] = 1
        mcs[v] = 0
    for v in reversed(verts):
        p = parent[v]
        if p >= 0 and mark[p] == stamp:
            sz[p] += sz[v]
            if sz[v] > mcs[p]:
                mcs[p] = sz[v]
    best, best_val = -1, m + 1
    for v in verts:
        val = max(mcs[v], m - sz[v])
        if val < best_val or (val == best_val and v < best):
            best, best_val = v, val
    return best


@dataclass
class PartitionResult:
    """Cut set X plus the components of the view minus X.

    portals[i] = (upper, lower): the X-vertices component i touches; upper is
    an ancestor of the component, lower a descendant; either may be None.
    """
    X: list[int]
    components: list[list[int]]
    portals: list[tuple[int | None, int | None]]

    def to_json(self) -> dict:
        return {
            "X": self.X,
            "components": self.components,
            "portals": [[u if u is not None else -1, l if l is not None else -1]
                        for u, l in self.portals],
        }


def tree_partition(t: RootedTree, ell: int, verts=None,
                   scratch: Scratch | None = None, ordered: bool = False) -> PartitionResult:
    """Cut set X of at most 2m/(ell+1) - 1 vertices leaving components of size
    <= ell, each with at most two outgoing edges toward X (one up, one down).

    Bottom-up sweep: a vertex joins X when its pending open component would
    exceed ell vertices or would acquire a second downward portal.
    """
    if ell < 1:
        raise ValueError("ell must be >= 1")
    scr = scratch or Scratch(t.n)
    if verts is None:
        verts = [int(v) for v in t.order]
    elif not ordered:
        verts = order_subset(t, verts)
    stamp = _mark(t, verts, scr)
    parent, mark = t.parent, scr.mark
    # per-vertex accumulators over in-view children processed so far
    acc_sz, acc_down, in_x = scr.sz, scr.aux, scr.aux2
    down_port = {}
    for v in verts:
        acc_sz[v] = 0
        acc_down[v] = 0
        in_x[v] = 0
    X = []
    for v in reversed(verts):
        s = 1 + acc_sz[v]
        d = acc_down[v]
        if s > ell or d >= 2:
            in_x[v] = 1
            X.append(v)
            contrib_down, contrib_sz, port = 1, 0, v
        else:
            contrib_down, contrib_sz = (1 if d == 1 else 0), s
            port = down_port.get(v, -1)
        p = parent[v]
        if p >= 0 and mark[p] == stamp:
            acc_sz[p] += contrib_sz
            if contrib_down:
                acc_down[p] += 1
                if acc_down[p] == 1:
                    down_port[p] = port
    X.reverse()
    # top-down component labeling (verts is top-first)
    comp_of = {}
    components: list[list[int]] = []
    portals: list[tuple[int | None, int | None]] = []
    for v in verts:
        if in_x[v]:
            continue
        p = parent[v]
        if p >= 0 and mark[p] == stamp and not in_x[p]:
            ci = comp_of[p]
        else:
            ci = len(components)
            upper = int(p) if (p >= 0 and mark[p] == stamp) else None
            dp = down_port.get(v, -1)
            portals.append((upper, int(dp) if dp >= 0 else None))
            components.append([])
        comp_of[v] = ci
        components[ci].append(v)
    return PartitionResult(X=X, components=components, portals=portals)


def heavy_light(t: RootedTree):
    """Heavy-path decomposition.

    Returns (paths, contracted, vertex_to_path): paths partition the vertex
    set (each listed top-down), contracted is the unit-weight tree obtained by
    contracting each heavy path, with height <= ceil(log2 n).
    """
    n = t.n
    if n == 0:
        return [], RootedTree(np.empty(0, dtype=np.int64), validate=False), []
    sz = t.subtree_size
    heavy = np.full(n, -1, dtype=np.int64)
    for v in t.order:
        best = -1
        best_sz = 0
        for c in t.children(v):
            c = int(c)
            if sz[c] > best_sz or (sz[c] == best_sz and (best == -1 or c < best)):
                best, best_sz = c, int(sz[c])
        heavy[v] = best
    vertex_to_path = [-1] * n
    paths: list[list[int]] = []
    for v in t.order:
        v = int(v)
        p = int(t.parent[v])
        if p >= 0 and heavy[p] == v:
            pid = vertex_to_path[p]
        else:
            pid = len(paths)
            paths.append([])
        vertex_to_path[v] = pid
        paths[pid].append(v)
    cparent = np.empty(len(paths), dtype=np.int64)
    for pid, pverts in enumerate(paths):
        top = pverts[0]
        p = int(t.parent[top])
        cparent[pid] = vertex_to_path[p] if p >= 0 else -1
    contracted = RootedTree(cparent)
    return paths, contracted, vertex_to_path


def subtree_distances_from(t: RootedTree, verts, src: int, scr: Scratch,
                           stamp: int | None = None) -> dict[int, float]:
    """Exact metric distances from src to every vertex of the view, walking
    only tree edges inside the view (plus src's own edges into it)."""
    if stamp is None:
        stamp = _mark(t, verts, scr)
    mark, parent, weight = scr.mark, t.parent, t.weight
    dist = {src: 0.0}
    stack = [src]
    while stack:
        v = stack.pop()
        dv = dist[v]
        p = int(parent[v])
        if p >= 0 and (mark[p] == stamp or p == src) and p not in dist:
            dist[p] = dv + float(weight[v])
            stack.append(p)
        for c in t.children(v):
            c = int(c)
            if (mark[c] == stamp or c == src) and c not in dist:
                dist[c] = dv + float(weight[c])
                stack.append(c)
    return dist

"""3-hop stretch-1 fixed-port routing over the hop-3 spanner, with bit-exact
memory accounting, plus a multi-tree dispatch harness for externally supplied
tree covers.

The forwarding decision at a vertex reads only that vertex's table and the
destination label (the header, which is never rewritten).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

import numpy as np

from .core import RootedTree, Spanner
from .decompose import Scratch
from .treewidth import SpannerBuilder, build_hop3, hop3_calls


class PortAssignment:
    """Per-vertex bijection between incident spanner edges and port numbers.

    Port numbers are 1..deg(u) unless an adversarial assignment (for example
    the hard-instance block numbering) widens the range; they are always
    distinct per vertex.
    """

    def __init__(self, port_of: list[dict[int, int]]):
        self.port_of = port_of
        self.neighbor_at = []
        for u, m in enumerate(port_of):
            rev = {}
            for v, p in m.items():
                if p in rev:
                    raise ValueError(f"duplicate port {p} at vertex {u}")
                rev[p] = v
            self.neighbor_at.append(rev)
        self.max_port = max((max(m.values(), default=0) for m in port_of), default=0)

    def port(self, u: int, v: int) -> int:
        return self.port_of[u][v]

    def neighbor(self, u: int, p: int) -> int:
        return self.neighbor_at[u][p]


def spanner_adjacency(s: Spanner) -> list[dict[int, float]]:
    adj: list[dict[int, float]] = [dict() for _ in range(s.num_vertices)]
    for u, v, w in zip(s.eu, s.ev, s.ew):
        adj[int(u)][int(v)] = float(w)
        adj[int(v)][int(u)] = float(w)
    return adj


def assign_ports(s: Spanner, seed: int) -> PortAssignment:
    """Seeded random permutation per vertex: the adversary stand-in for the
    fixed-port model."""
    rng = random.Random(seed)
    adj = spanner_adjacency(s)
    port_of = []
    for u, nbrs in enumerate(adj):
        vs = sorted(nbrs)
        ports = list(range(1, len(vs) + 1))
        rng.shuffle(ports)
        port_of.append(dict(zip(vs, ports)))
    return PortAssignment(port_of)


# table entry layout:
#   clique record: (r, {peer_id: (port, anc)})
#   component entries: (r, (up_id, up_port, up_anc), (lo_id, lo_port, lo_anc))
# label layout:
#   entries: (r, (up_id, up_port), (lo_id, lo_port)); terminal call id


@dataclass
class VertexTable:
    vid: int
    anc: tuple[int, int]
    clique_r: int = -1
    clique: dict[int, tuple[int, tuple[int, int]]] = field(default_factory=dict)
    entries: list = field(default_factory=list)
    rlist: list[int] = field(default_factory=list)


@dataclass
class VertexLabel:
    vid: int
    anc: tuple[int, int]
    terminal: int = -1
    entries: list = field(default_factory=list)
    rlist: list[int] = field(default_factory=list)


@dataclass
class Scheme:
    tree: RootedTree
    spanner: Spanner
    ports: PortAssignment
    tables: list[VertexTable]
    labels: list[VertexLabel]
    adj: list[dict[int, float]]
    ncalls: int
    id_bits: int = 0
    anc_bits: int = 0
    port_bits: int = 0
    r_bits: int = 0

    def table_bits(self, u: int) -> int:
        t = self.tables[u]
        bits = self.id_bits + self.anc_bits + 8
        if t.clique_r >= 0:
            bits += self.r_bits + 8 + len(t.clique) * (self.id_bits + self.port_bits
                                                       + self.anc_bits)
        bits += 8 + len(t.entries) * (self.r_bits + 2 * (self.id_bits + self.port_bits
                                                         + self.anc_bits))
        return bits

    def label_bits(self, v: int) -> int:
        l = self.labels[v]
        bits = self.id_bits + self.anc_bits + self.r_bits + 8
        bits += len(l.entries) * (self.r_bits + 2 * (self.id_bits + self.port_bits))
        return bits


def _anc_of(t: RootedTree, v: int) -> tuple[int, int]:
    return (int(t.tin[v]), int(t.tout[v]))


def _contains(a: tuple[int, int], b: tuple[int, int]) -> bool:
    """Ancestor test on DFS-interval labels: a encloses b."""
    return a[0] <= b[0] and b[1] <= a[1]


def build_scheme(t: RootedTree, ports: PortAssignment,
                 spanner: Spanner | None = None) -> Scheme:
    """Tables and labels over the hop-3 spanner of t under the given ports."""
    if spanner is None:
        spanner, _ = build_hop3(t)
    adj = spanner_adjacency(spanner)
    n = t.n
    tables = [VertexTable(v, _anc_of(t, v)) for v in range(n)]
    labels = [VertexLabel(v, _anc_of(t, v)) for v in range(n)]
    calls, _ = hop3_calls(t)
    for call in calls:
        r = call.id
        for u in call.clique:
            tu = tables[u]
            tu.clique_r = r
            tu.clique = {v: (ports.port(u, v), _anc_of(t, v))
                         for v in call.clique if v != u}
            tu.rlist.append(r)
            labels[u].terminal = r
        for comp, (up, lo) in zip(call.comps, call.portals):
            if up is None:
                up = lo
            if lo is None:
                lo = up
            for x in comp:
                a = (up, ports.port(x, up), _anc_of(t, up))
                b = (lo, ports.port(x, lo), _anc_of(t, lo))
                tables[x].entries.append((r, a, b))
                tables[x].rlist.append(r)
                labels[x].entries.append((r, (up, ports.port(up, x)),
                                          (lo, ports.port(lo, x))))
                labels[x].rlist.append(r)
    sch = Scheme(t, spanner, ports, tables, labels, adj, len(calls))
    sch.id_bits = max(1, math.ceil(math.log2(max(2, n))))
    sch.anc_bits = 2 * max(1, math.ceil(math.log2(max(2, 2 * n))))
    sch.port_bits = max(1, math.ceil(math.log2(max(2, ports.max_port + 1))))
    sch.r_bits = max(1, math.ceil(math.log2(max(2, len(calls)))))
    for tb in tables:
        assert len(tb.clique) <= 255 and len(tb.entries) <= 255
    return sch


def _forward(tbl: VertexTable, lbl: VertexLabel) -> int:
    """Port choice at the vertex owning `tbl` for destination `lbl`.

    Reads nothing but the two arguments; the header (label) is never changed.
    """
    tid = lbl.vid
    # direct clique edge
    hit = tbl.clique.get(tid)
    if hit is not None:
        return hit[0]
    # we are a portal of the destination's component at some call
    for r, up, lo in lbl.entries:
        if up[0] == tbl.vid:
            return up[1]
        if lo[0] == tbl.vid:
            return lo[1]
    # deepest common call: both participation chains share a prefix
    ra, rb = tbl.rlist, lbl.rlist
    i = 0
    last = -1
    la, lb = len(ra), len(rb) + 1
    while i < la and i < lb:
        va = ra[i]
        vb = rb[i] if i < len(rb) else lbl.terminal
        if va != vb:
            break
        last = va
        i += 1
    if last < 0:
        raise ValueError("no common recursive call; scheme malformed")
    if tbl.clique_r == last:
        # we sit in the clique of the last common call; v hangs below it in a
        # component whose portals are clique peers (entries store upper first)
        for r, up, lo in lbl.entries:
            if r == last:
                pu = tbl.clique[up[0]]
                if up[0] == lo[0]:
                    return pu[0]
                pl = tbl.clique[lo[0]]
                # enter through the lower portal iff it is our ancestor
                if _contains(pl[1], tbl.anc):
                    return pl[0]
                return pu[0]
        raise ValueError("destination label lacks the common call entry")
    # we sit in a component of the last common call: leave through a portal
    for r, up, lo in tbl.entries:
        if r == last:
            if up[0] == lo[0]:
                return up[1]
            # exit downward iff the lower portal is an ancestor of v
            if _contains(lo[2], lbl.anc):
                return lo[1]
            return up[1]
    raise ValueError("table lacks the common call entry")


@dataclass
class RouteResult:
    vertices: list[int]
    ports: list[int]
    hops: int
    weight: float


def route(scheme: Scheme, u: int, v: int, debug: bool = False,
          max_hops: int = 8) -> RouteResult:
    """Simulate forwarding from u to v; the header is lbl(v), never rewritten."""
    if u == v:
        return RouteResult([u], [], 0, 0.0)
    lbl = scheme.labels[v]
    cur = u
    verts = [u]
    ports_taken: list[int] = []
    weight = 0.0
    while cur != v:
        if len(ports_taken) >= max_hops:
            raise RuntimeError(f"routing loop: {verts} -> {v}")
        p = _forward(scheme.tables[cur], lbl)
        nxt = scheme.ports.neighbor(cur, p)
        if debug:
            # the chosen next vertex must lie on the tree path from cur to v
            t = scheme.tree
            w = t.lca(cur, v)
            on_path = ((t.is_ancestor(w, nxt)) and
                       (t.is_ancestor(nxt, cur) or t.is_ancestor(nxt, v)))
            assert on_path, (cur, nxt, v)
        weight += scheme.adj[cur][nxt]
        ports_taken.append(p)
        verts.append(nxt)
        cur = nxt
    return RouteResult(verts, ports_taken, len(ports_taken), weight)


def route_over_cover(trees: list[RootedTree], schemes: list[Scheme], selector,
                     u: int, v: int) -> RouteResult:
    """Dispatch harness: route on the tree the external selector picks.

    selector: callable (u, v) -> tree index, or an indexable of the same.
    The stretch bound is the selector's guarantee, reported, not assumed.
    """
    idx = selector(u, v) if callable(selector) else selector[(u, v)]
    if not (0 <= idx < len(schemes)):
        raise IndexError(f"selector produced tree index {idx} out of range")
    res = route(schemes[idx], u, v)
    return RouteResult(res.vertices, res.ports, res.hops, res.weight)


def memory_stats(scheme: Scheme) -> dict:
    tb = [scheme.table_bits(u) for u in range(scheme.tree.n)]
    lb = [scheme.label_bits(v) for v in range(scheme.tree.n)]
    tot = [a + b for a, b in zip(tb, lb)]
    return {
        "table_bits": tb,
        "label_bits": lb,
        "max_table_bits": max(tb, default=0),
        "max_label_bits": max(lb, default=0),
        "max_total_bits": max(tot, default=0),
    }


def _encode_bits(chunks: list[tuple[int, int]]) -> str:
    """Pack (value, width) fields into a hex string (canonical encoding)."""
    acc = 0
    nbits = 0
    for val, width in chunks:
        if val < 0 or val >= (1 << width):
            raise ValueError(f"field value {val} exceeds {width} bits")
        acc = (acc << width) | val
        nbits += width
    pad = (-nbits) % 4
    acc <<= pad
    digits = max(1, (nbits + pad) // 4)
    return format(acc, f"0{digits}x")


def dump_scheme(scheme: Scheme) -> dict:
    """JSON-ready dump: schema descriptor plus per-vertex hex bitstrings."""
    ib, ab, pb, rb = scheme.id_bits, scheme.anc_bits, scheme.port_bits, scheme.r_bits
    half = ab // 2

    def anc_chunks(anc):
        return [(anc[0], half), (anc[1], half)]

    tables_hex = []
    labels_hex = []
    for u in range(scheme.tree.n):
        t = scheme.tables[u]
        chunks = [(t.vid, ib)] + anc_chunks(t.anc)
        if t.clique_r >= 0:
            chunks.append((1, 8))
            chunks.append((t.clique_r, rb))
            chunks.append((len(t.clique), 8))
            for pid in sorted(t.clique):
                port, anc = t.clique[pid]
                chunks += [(pid, ib), (port, pb)] + anc_chunks(anc)
        else:
            chunks.append((0, 8))
        chunks.append((len(t.entries), 8))
        for r, up, lo in t.entries:
            chunks.append((r, rb))
            for pid, port, anc in (up, lo):
                chunks += [(pid, ib), (port, pb)] + anc_chunks(anc)
        tables_hex.append(_encode_bits(chunks))
        l = scheme.labels[u]
        chunks = [(l.vid, ib)] + anc_chunks(l.anc) + [(max(0, l.terminal), rb),
                                                      (len(l.entries), 8)]
        for r, up, lo in l.entries:
            chunks.append((r, rb))
            for pid, port in (up, lo):
                chunks += [(pid, ib), (port, pb)]
        labels_hex.append(_encode_bits(chunks))
    return {
        "schema": {"id_bits": ib, "anc_bits": ab, "port_bits": pb, "r_bits": rb,
                   "calls": scheme.ncalls},
        "tables": tables_hex,
        "labels": labels_hex,
    }

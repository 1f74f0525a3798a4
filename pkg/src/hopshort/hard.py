"""Routing lower-bound instance family: a complete t-ary tree padded with
dummy leaves whose counts scale with q_i = (t^i - 1)/(t - 1), plus the
block port numbering that forces large routing tables, and a measurement
harness that runs the 3-hop scheme on those instances.
"""

from __future__ import annotations

import csv
import math
import random
from dataclasses import dataclass, field

import numpy as np

from .core import RootedTree, Spanner, close
from .routing import PortAssignment, build_scheme, memory_stats, route, spanner_adjacency
from .treewidth import build_hop3


@dataclass
class HardInstance:
    t: int
    h: int
    d: int
    tree: RootedTree          # padded tree T (dummy counts scaled by q_i)
    base: RootedTree          # T0 (flat dummy counts)
    skeleton_n: int           # vertices of the underlying complete t-ary tree
    q: list[int]              # q_i = (t^i - 1)/(t - 1), i = 0..h
    dummy_parent_t: list[int]     # parent of each dummy leaf of T
    dummy_parent_base: list[int]  # parent of each dummy leaf of T0

    @property
    def n_base(self) -> int:
        return self.base.n

    def height_of(self, u: int) -> int:
        """Height of a skeleton vertex (root = h, skeleton leaves = 0)."""
        return self.h - int(self.tree.depth[u])

    def non_dummy(self) -> range:
        """Shared ids of non-dummy vertices in both trees."""
        return range(self.skeleton_n)

    def to_json(self) -> dict:
        return {"t": self.t, "h": self.h, "d": self.d,
                "tree": self.tree.to_json(), "base": self.base.to_json(),
                "skeleton_n": self.skeleton_n, "q": self.q}

    @classmethod
    def from_json(cls, obj: dict) -> "HardInstance":
        return gen_hard_instance(obj["t"], obj["h"], obj["d"])


def gen_hard_instance(t: int, h: int, d: int) -> HardInstance:
    """Skeleton = complete t-ary tree of height h; T0 pads every non-root
    internal vertex with d-t-1 dummy leaves and the root with d-t; T scales
    those counts by q_i at height i.  Unit edge weights."""
    if t < 2 or h < 1 or d < t + 1:
        raise ValueError("need t >= 2, h >= 1, d >= t+1")
    parent = [-1]
    level = [0]
    for _ in range(h):
        nxt = []
        for u in level:
            for _ in range(t):
                parent.append(u)
                nxt.append(len(parent) - 1)
        level = nxt
    skeleton_n = len(parent)
    q = [(t ** i - 1) // (t - 1) for i in range(h + 1)]

    def padded(scale_by_q: bool):
        par = list(parent)
        dummy_parent = []
        for u in range(skeleton_n):
            depth_u = 0
            x = u
            while par[x] >= 0:
                x = par[x]
                depth_u += 1
            height_u = h - depth_u
            if height_u == 0:
                continue  # skeleton leaves get no dummies
            base_count = (d - t) if u == 0 else (d - t - 1)
            count = base_count * (q[height_u] if scale_by_q else 1)
            for _ in range(count):
                par.append(u)
                dummy_parent.append(u)
        weights = [0] + [1] * (len(par) - 1)
        return RootedTree(par, weights), dummy_parent

    tree, dp_t = padded(True)
    base, dp_b = padded(False)
    return HardInstance(t, h, d, tree, base, skeleton_n, q, dp_t, dp_b)


def random_base_ports(inst: HardInstance, seed: int) -> list[list[int]]:
    """Seeded per-vertex permutations of 1..d for the skeleton internal
    vertices of T0 (the adversary's choice on the unpadded instance)."""
    rng = random.Random(seed)
    out = []
    for u in range(inst.skeleton_n):
        perm = list(range(1, inst.d + 1))
        if inst.height_of(u) >= 1:
            rng.shuffle(perm)
        out.append(perm)
    return out


def block_port_numbering(inst: HardInstance, base_ports: list[list[int]],
                         seed: int, spanner: Spanner | None = None) -> PortAssignment:
    """Port assignment on the hop-3 spanner of T realizing the block rule: at
    an internal skeleton vertex of height i, spanner edges toward non-dummy
    descendants through child j take ports from the base-port-p_j block of
    width q_i, and dummy-leaf edges fill the remaining blocks.  Other incident
    edges get the smallest unused numbers; non-internal vertices get seeded
    random permutations.
    """
    if spanner is None:
        spanner, _ = build_hop3(inst.tree)
    t, h, d = inst.t, inst.h, inst.d
    tree = inst.tree
    adj = spanner_adjacency(spanner)
    rng = random.Random(seed)
    port_of: list[dict[int, int]] = []
    for u in range(tree.n):
        nbrs = sorted(adj[u])
        height_u = inst.height_of(u) if u < inst.skeleton_n else -1
        if height_u < 1:
            ports = list(range(1, len(nbrs) + 1))
            rng.shuffle(ports)
            port_of.append(dict(zip(nbrs, ports)))
            continue
        qi = inst.q[height_u]
        children = [int(c) for c in tree.children(u) if c < inst.skeleton_n]
        children.sort()
        assign: dict[int, int] = {}
        used: set[int] = set()

        def fill_block(block_no: int, members: list[int]):
            if len(members) > qi:
                raise ValueError(f"block overflow at vertex {u}: {len(members)} > q_i={qi}")
            start = (block_no - 1) * qi + 1
            for off, v in enumerate(sorted(members)):
                assign[v] = start + off
                used.add(start + off)

        # children blocks: spanner edges to non-dummy descendants through child j
        for j, c in enumerate(children):
            lo, hi = int(tree.tin[c]), int(tree.tout[c])
            members = [v for v in nbrs
                       if v < inst.skeleton_n and lo <= tree.tin[v] < hi]
            fill_block(base_ports[u][j], members)
        # dummy groups of size q_i fill the remaining neighbor blocks
        dummies = sorted(v for v in nbrs
                         if v >= inst.skeleton_n and int(tree.parent[v]) == u)
        ngroups = len(dummies) // qi
        expected = (d - t) if u == 0 else (d - t - 1)
        if ngroups != expected or len(dummies) % qi:
            raise ValueError(f"dummy count mismatch at vertex {u}")
        for g in range(ngroups):
            fill_block(base_ports[u][t + g], dummies[g * qi:(g + 1) * qi])
        # everything else: smallest unused numbers, increasing neighbor id
        rest = [v for v in nbrs if v not in assign]
        nxt = 1
        for v in rest:
            while nxt in used:
                nxt += 1
            assign[v] = nxt
            used.add(nxt)
        port_of.append(assign)
    return PortAssignment(port_of)


def relaxed_pairs(inst: HardInstance):
    """Ordered (source, destination) pairs of the relaxed-routing query set:
    destination non-dummy, source a strict ancestor of it."""
    tree = inst.tree
    for v in inst.non_dummy():
        u = int(tree.parent[v])
        while u >= 0:
            yield u, v
            u = int(tree.parent[u])


def measure_routing_memory(inst: HardInstance, seeds: list[int]) -> list[dict]:
    """Build the 3-hop scheme on T under block port numbering for each seed,
    verify every relaxed-routing pair, and record per-vertex memory maxima."""
    spanner, _ = build_hop3(inst.tree)
    rows = []
    for seed in seeds:
        ports = block_port_numbering(inst, random_base_ports(inst, seed), seed,
                                     spanner=spanner)
        scheme = build_scheme(inst.tree, ports, spanner=spanner)
        pairs = 0
        failures = 0
        for u, v in relaxed_pairs(inst):
            pairs += 1
            res = route(scheme, u, v)
            want = float(inst.tree.depth[v] - inst.tree.depth[u])
            if res.hops > 3 or not close(res.weight, want):
                failures += 1
        st = memory_stats(scheme)
        rows.append({
            "seed": seed, "t": inst.t, "h": inst.h, "d": inst.d,
            "n_vertices": inst.tree.n, "n_base": inst.base.n,
            "max_table_bits": st["max_table_bits"],
            "max_label_bits": st["max_label_bits"],
            "max_total_bits": st["max_total_bits"],
            "relaxed_pairs": pairs, "failures": failures,
        })
    return rows


MEASURE_FIELDS = ["seed", "t", "h", "d", "n_vertices", "n_base", "max_table_bits",
                  "max_label_bits", "max_total_bits", "relaxed_pairs", "failures"]


def write_measure_csv(rows: list[dict], path: str):
    with open(path, "w", newline="") as f:
        wr = csv.DictWriter(f, fieldnames=MEASURE_FIELDS)
        wr.writeheader()
        for row in rows:
            wr.writerow(row)

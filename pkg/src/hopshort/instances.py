"""Seeded instance generators: paths, uniform-attachment random trees,
integer-coordinate lines, and random HSTs.  All outputs are deterministic in
the seed and use integer weights so distance checks stay exact."""

from __future__ import annotations

import random

import numpy as np

from .core import HST, HSTNode, LineMetric, RootedTree


def gen_path(n: int) -> RootedTree:
    parent = [-1] + list(range(n - 1))
    return RootedTree(parent, [0] + [1] * (n - 1))


def gen_random_tree(n: int, seed: int, max_weight: int = 9) -> RootedTree:
    """Uniform attachment: parent of i drawn uniformly from 0..i-1."""
    rng = random.Random(seed)
    parent = [-1] + [rng.randrange(i) for i in range(1, n)]
    weight = [0] + [rng.randint(1, max_weight) for _ in range(n - 1)]
    return RootedTree(parent, weight)


def gen_line(n: int, seed: int, max_gap: int = 9) -> LineMetric:
    rng = random.Random(seed)
    pts = [0]
    for _ in range(n - 1):
        pts.append(pts[-1] + rng.randint(1, max_gap))
    return LineMetric(pts)


def gen_hst(n: int, seed: int, sep: float = 2.0, delta: int = 4) -> HST:
    """Random (sep, delta)-HST on n leaves; internal labels are sep^height so
    the separation holds with equality along the deepest chains."""
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = random.Random(seed)
    pts = list(range(n))
    rng.shuffle(pts)

    def rec(points):
        if len(points) == 1:
            return HSTNode(point=points[0]), 0
        c = rng.randint(2, min(delta, len(points)))
        splits = sorted(rng.sample(range(1, len(points)), c - 1))
        parts = []
        prev = 0
        for sp in splits + [len(points)]:
            parts.append(points[prev:sp])
            prev = sp
        kids = []
        hmax = 0
        for p in parts:
            kid, hk = rec(p)
            kids.append(kid)
            hmax = max(hmax, hk)
        return HSTNode(gamma=float(sep) ** (hmax + 1), children=kids), hmax + 1

    root, _ = rec(pts)
    return HST(root)


def generate(kind: str, n: int, seed: int, **kw):
    if kind == "path":
        return gen_path(n)
    if kind == "random-tree":
        return gen_random_tree(n, seed, **kw)
    if kind == "line":
        return gen_line(n, seed, **kw)
    if kind == "hst":
        return gen_hst(n, seed, **kw)
    raise ValueError(f"unknown instance kind {kind!r}")

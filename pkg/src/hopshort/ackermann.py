"""Ackermann function families A(k, n), B(k, n) and the inverse alpha_k(n).

Values saturate at a configurable cap (default 2**64): alpha only ever
compares values against n, so saturation is lossless for the inverse.
"""

from __future__ import annotations

from functools import lru_cache

CAP = 1 << 64


def ackermann_A(k: int, s: int, cap: int = CAP) -> int:
    """Exact A(k, s), saturated at `cap` (a returned value == cap means >= cap)."""
    if k < 0 or s < 0:
        raise ValueError("k and s must be nonnegative")
    if k == 0:
        return min(2 * s, cap)
    v = 1  # A(k, 0)
    for _ in range(s):
        if v >= cap:
            return cap
        v = ackermann_A(k - 1, v, cap)
    return min(v, cap)


def ackermann_B(k: int, s: int, cap: int = CAP) -> int:
    """Exact B(k, s), saturated at `cap`."""
    if k < 0 or s < 0:
        raise ValueError("k and s must be nonnegative")
    if k == 0:
        return min(s * s, cap)
    v = 2  # B(k, 0)
    for _ in range(s):
        if v >= cap:
            return cap
        v = ackermann_B(k - 1, v, cap)
    return min(v, cap)


@lru_cache(maxsize=None)
def inv_ackermann(k: int, n: int) -> int:
    """alpha_k(n): minimal s >= 0 with A(k//2, s) >= n (even k) or
    B(k//2, s) >= n (odd k)."""
    if k < 0 or n < 0:
        raise ValueError("k and n must be nonnegative")
    fam = ackermann_A if k % 2 == 0 else ackermann_B
    level = k // 2
    cap = max(n + 1, 4)
    s = 0
    while fam(level, s, cap) < n:
        s += 1
    return s


def alpha_thresholds(k: int, nmax: int) -> list[int]:
    """Values F(k//2, s) for s = 0, 1, ... until the first one >= nmax.

    alpha_k(n) == searchsorted(thresholds, n) for n <= nmax; used as an
    independent enumeration oracle in tests.
    """
    fam = ackermann_A if k % 2 == 0 else ackermann_B
    level = k // 2
    cap = max(nmax + 1, 4)
    out = []
    s = 0
    while True:
        v = fam(level, s, cap)
        out.append(v)
        if v >= nmax:
            return out
        s += 1


def log_star(n: float) -> int:
    """Iterated base-2 logarithm count down to <= 1."""
    import math
    c = 0
    while n > 1:
        n = math.log2(n)
        c += 1
    return c

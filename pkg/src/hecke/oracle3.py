"""Brute-force reference values for q = 3, where V_3 is the set of primitive
integer vectors.  Only meant for small radii."""

from __future__ import annotations

import math
from collections import Counter
from functools import lru_cache

from .errors import BudgetError, DomainError

MAX_RADIUS = 60


def primitive_vectors(R: float) -> list[tuple[int, int]]:
    """All (x, y) with gcd(x, y) = 1 and x^2 + y^2 <= R^2, sorted."""
    r = math.isqrt(int(R * R)) if R >= 0 else -1
    r2 = R * R
    return [
        (x, y)
        for x in range(-r, r + 1)
        for y in range(-r, r + 1)
        if x * x + y * y <= r2 and math.gcd(x, y) == 1
    ]


def std_totient(n: int) -> int:
    """Euler's totient of |n|."""
    n = abs(n)
    if n == 0:
        raise DomainError("totient of 0 is undefined")
    out = n
    p = 2
    m = n
    while p * p <= m:
        if m % p == 0:
            while m % p == 0:
                m //= p
            out -= out // p
        p += 1
    if m > 1:
        out -= out // m
    return out


@lru_cache(maxsize=8)
def _det_table(R2: int) -> Counter:
    vs = primitive_vectors(math.sqrt(R2))
    vs = [(x, y, x * x + y * y) for x, y in vs]
    table: Counter = Counter()
    for x1, y1, a in vs:
        for x2, y2, b in vs:
            if a + b <= R2:
                table[x1 * y2 - y1 * x2] += 1
    return table


def brute_count_pairs(R: int, n: int) -> int:
    """Ordered pairs of primitive vectors with det = n and |v1|^2 + |v2|^2 <= R^2."""
    if R > MAX_RADIUS:
        raise BudgetError(f"brute force is limited to R <= {MAX_RADIUS}")
    if int(R) != R:
        raise DomainError("brute force expects an integer radius")
    return _det_table(int(R) * int(R))[n]

"""Integer-only helpers for comparisons involving q^(1/2) and q^(1/3)."""

from __future__ import annotations

from fractions import Fraction
from math import isqrt

SCALE = 1000


def icbrt(x: int) -> int:
    """floor(x ** (1/3)) for x >= 0, exact."""
    if x < 0:
        raise ValueError("negative input")
    r = int(round(x ** (1 / 3))) if x < 1 << 1000 else 1 << (x.bit_length() // 3 + 1)
    while r**3 > x:
        r -= 1
    while (r + 1) ** 3 <= x:
        r += 1
    return r


def root_constant(union: int, lines: int, q: int, root: int) -> dict:
    """Measured c in ``union >= c * lines * q^(1/root)``.

    ``cLower`` is floor(SCALE * c) / SCALE, certified by the integer test
    ``(SCALE * union)^root >= cLower_num^root * lines^root * q``.
    """
    if lines <= 0:
        raise ValueError("need at least one line")
    num = (SCALE * union) ** root
    den = lines**root * q
    k = isqrt(num // den) if root == 2 else icbrt(num // den)
    return {
        "root": root,
        "unionPow": union**root,
        "comparison": lines**root * q,
        "c": round(union / (lines * q ** (1 / root)), 12),
        "cLower": [k, SCALE],
    }


def frac(x: Fraction) -> list[int]:
    return [x.numerator, x.denominator]


def ceil_div(a: int, b: int) -> int:
    return -(-a // b)

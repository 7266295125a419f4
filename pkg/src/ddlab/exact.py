"""Exact rational helpers and integer enumeration of ellipse/annulus points.

Everything that decides membership or compares against an irrational radius
goes through these functions so that no float ever decides a predicate.
"""

from fractions import Fraction
from math import floor, gcd, isqrt, lcm, sqrt

import numpy as np

DEFAULT_BUDGET_BYTES = 2**31


def to_fraction(value) -> Fraction:
    """Parse ints, Fractions, "p/q" strings and decimal strings exactly.

    Floats are read through their shortest repr, so ``0.3`` becomes ``3/10``.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, float):
        return Fraction(repr(value))
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"cannot read {value!r} as an exact rational")


def frac_str(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def common_denominator(*values: Fraction) -> int:
    d = 1
    for v in values:
        d = lcm(d, Fraction(v).denominator)
    return d


def sqrt_le_sqrt_diff(q, A, B) -> bool:
    """Decide sqrt(q) <= sqrt(A) - sqrt(B) exactly for rationals q, A, B >= 0."""
    q, A, B = Fraction(q), Fraction(A), Fraction(B)
    rest = A - q - B
    if rest < 0:
        return False
    return rest * rest >= 4 * q * B


def floor_sqrt_diff_sq(A, B, scale=1) -> int:
    """Largest integer n >= 0 with scale*n <= (sqrt(A) - sqrt(B))**2.

    Returns 0 when sqrt(A) <= sqrt(B); callers treat that as an empty range.
    """
    A, B, scale = Fraction(A), Fraction(B), Fraction(scale)
    if A <= B:
        return 0
    approx = (sqrt(float(A)) - sqrt(float(B))) ** 2 / float(scale)
    n = max(0, int(approx))
    while n > 0 and not sqrt_le_sqrt_diff(scale * n, A, B):
        n -= 1
    while sqrt_le_sqrt_diff(scale * (n + 1), A, B):
        n += 1
    return n


def check_budget(what: str, nbytes: int, budget: int | None) -> None:
    from .errors import BudgetExceeded

    budget = DEFAULT_BUDGET_BYTES if budget is None else budget
    if nbytes > budget:
        raise BudgetExceeded(what, nbytes, budget)


def _isqrt_array(x: np.ndarray) -> np.ndarray:
    """floor(sqrt(x)) for a nonnegative int64 array, corrected to be exact."""
    r = np.floor(np.sqrt(x.astype(np.float64))).astype(np.int64)
    r -= (r * r > x).astype(np.int64)
    r += ((r + 1) * (r + 1) <= x).astype(np.int64)
    return r


def _ceil_div(a, b):
    return -((-a) // b)


def _stripe_ranges(A, B, C, M, D, e1, e2, X1):
    """Per-stripe inclusive u2 ranges (widened by one) for A X1^2 + B X1 X2 + C X2^2 <= M."""
    disc = 4 * C * M - (4 * A * C - B * B) * X1 * X1
    ok = disc >= 0
    r = np.zeros_like(disc)
    r[ok] = _isqrt_array(disc[ok])
    lo_x2 = (-B * X1 - r) // (2 * C) - 1
    hi_x2 = _ceil_div(-B * X1 + r, 2 * C) + 1
    lo_u2 = _ceil_div(lo_x2 - e2, D)
    hi_u2 = (hi_x2 - e2) // D
    return ok, lo_u2, hi_u2


def _expand(u1, lo, hi):
    counts = np.maximum(hi - lo + 1, 0)
    total = int(counts.sum())
    rows = np.repeat(u1, counts)
    starts = np.repeat(lo, counts)
    offsets = np.arange(total, dtype=np.int64) - np.repeat(np.cumsum(counts) - counts, counts)
    return rows, starts + offsets


def ellipse_points(A, B, C, M, D=1, e=(0, 0), lower=None, budget=None):
    """Integer u with lower < F(D*u + e) <= M, F(X) = A X1^2 + B X1 X2 + C X2^2.

    ``F`` must be positive definite with integer coefficients. With ``lower``
    set, only the annulus is enumerated (stripe by stripe, never the full
    disk). Returns an (m, 2) int64 array sorted by (u1, u2) and the F values.
    """
    A, B, C, M, D = int(A), int(B), int(C), int(M), int(D)
    e1, e2 = int(e[0]), int(e[1])
    empty = np.zeros((0, 2), dtype=np.int64), np.zeros(0, dtype=np.int64)
    if M < 0 or (lower is not None and lower >= M):
        return empty
    det4 = 4 * A * C - B * B
    if A <= 0 or det4 <= 0:
        raise ValueError("form is not positive definite")
    x1max = isqrt(4 * C * M // det4) + 1
    u1 = np.arange(_ceil_div(-x1max - e1, D), (x1max - e1) // D + 1, dtype=np.int64)
    X1 = D * u1 + e1
    ok, lo, hi = _stripe_ranges(A, B, C, M, D, e1, e2, X1)
    u1, lo, hi, X1 = u1[ok], lo[ok], hi[ok], X1[ok]
    if lower is None or lower < 0:
        predicted = int(np.maximum(hi - lo + 1, 0).sum())
        check_budget("ellipse enumeration", predicted * 40, budget)
        r1, r2 = _expand(u1, lo, hi)
    else:
        ok_in, ilo, ihi = _stripe_ranges(A, B, C, int(lower), D, e1, e2, X1)

        def f(u2):
            X2 = D * u2 + e2
            return A * X1 * X1 + B * X1 * X2 + C * X2 * X2

        # tighten the widened inner range to the exact convex interval {F <= lower}
        while True:
            move = ok_in & (ilo <= ihi) & (f(ilo) > lower)
            if not move.any():
                break
            ilo = ilo + move
        while True:
            move = ok_in & (ilo <= ihi) & (f(ihi) > lower)
            if not move.any():
                break
            ihi = ihi - move
        empty_in = ~ok_in | (ilo > ihi)
        left_hi = np.where(empty_in, hi, np.minimum(ilo - 1, hi))
        right_lo = np.where(empty_in, hi + 1, np.maximum(ihi + 1, lo))
        predicted = int(np.maximum(left_hi - lo + 1, 0).sum() + np.maximum(hi - right_lo + 1, 0).sum())
        check_budget("annulus enumeration", predicted * 40, budget)
        a1, a2 = _expand(u1, lo, left_hi)
        b1, b2 = _expand(u1, right_lo, hi)
        r1 = np.concatenate([a1, b1])
        r2 = np.concatenate([a2, b2])
    X1 = D * r1 + e1
    X2 = D * r2 + e2
    vals = A * X1 * X1 + B * X1 * X2 + C * X2 * X2
    keep = vals <= M
    if lower is not None:
        keep &= vals > lower
    pts = np.stack([r1[keep], r2[keep]], axis=1)
    vals = vals[keep]
    if lower is not None and len(pts):
        order = np.lexsort((pts[:, 1], pts[:, 0]))
        pts, vals = pts[order], vals[order]
    return pts, vals


def primitive(v1: int, v2: int) -> tuple[int, int]:
    """Primitive direction of (v1, v2) with the first nonzero entry positive."""
    g = gcd(v1, v2)
    if g == 0:
        raise ValueError("zero vector has no direction")
    v1, v2 = v1 // g, v2 // g
    if v1 < 0 or (v1 == 0 and v2 < 0):
        v1, v2 = -v1, -v2
    return v1, v2


def floor_frac(x: Fraction) -> int:
    return floor(Fraction(x))

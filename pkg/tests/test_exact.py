from fractions import Fraction
from math import isqrt

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ddlab.errors import BudgetExceeded
from ddlab.exact import (ellipse_points, floor_sqrt_diff_sq, frac_str, primitive, sqrt_le_sqrt_diff,
                         to_fraction)


def test_to_fraction_reads_exact_forms():
    assert to_fraction("3/6") == Fraction(1, 2)
    assert to_fraction(0.3) == Fraction(3, 10)
    assert to_fraction(7) == 7
    assert frac_str(Fraction(4, 2)) == "2" and frac_str(Fraction(-1, 3)) == "-1/3"
    with pytest.raises(TypeError):
        to_fraction(None)


@given(st.fractions(min_value=0, max_value=50), st.fractions(min_value=0, max_value=50),
       st.fractions(min_value=0, max_value=50))
def test_sqrt_predicate_matches_high_precision(q, A, B):
    import mpmath
    mpmath.mp.dps = 60
    lhs = mpmath.sqrt(mpmath.mpf(q.numerator) / q.denominator)
    rhs = mpmath.sqrt(mpmath.mpf(A.numerator) / A.denominator) - mpmath.sqrt(mpmath.mpf(B.numerator) / B.denominator)
    if abs(lhs - rhs) > mpmath.mpf(10) ** -40:
        assert sqrt_le_sqrt_diff(q, A, B) == bool(lhs <= rhs)


def test_sqrt_predicate_equality_cases():
    assert sqrt_le_sqrt_diff(1, 4, 1)          # 1 <= 2 - 1
    assert not sqrt_le_sqrt_diff(Fraction(101, 100), 4, 1)
    assert sqrt_le_sqrt_diff(0, 1, 1)
    assert not sqrt_le_sqrt_diff(0, 1, 2)


def test_floor_sqrt_diff_sq_z2_radius3():
    # (6 - sqrt 2)^2 = 21.03
    assert floor_sqrt_diff_sq(36, 2) == 21
    assert floor_sqrt_diff_sq(1, 4) == 0
    assert floor_sqrt_diff_sq(64, Fraction(4, 3)) == 46     # (8 - 2/sqrt 3)^2 = 46.86


@given(st.integers(1, 10**6), st.integers(0, 10**5), st.integers(1, 9))
def test_floor_sqrt_diff_sq_is_maximal(A, B, scale):
    n = floor_sqrt_diff_sq(A, B, scale)
    if A > B:
        assert n == 0 or sqrt_le_sqrt_diff(scale * n, A, B)
        assert not sqrt_le_sqrt_diff(scale * (n + 1), A, B)


def _brute(A, B, C, M, D, e, lower=None):
    r = isqrt(M) + 3
    out = set()
    for x in range(-r - 2, r + 3):
        for y in range(-r - 2, r + 3):
            X1, X2 = D * x + e[0], D * y + e[1]
            v = A * X1 * X1 + B * X1 * X2 + C * X2 * X2
            if v <= M and (lower is None or v > lower):
                out.add((x, y))
    return out


@given(st.sampled_from([(1, 0, 1), (1, 1, 1), (2, 2, 3), (3, -2, 5), (2, 1, 1)]),
       st.integers(0, 60), st.sampled_from([1, 2, 6]), st.integers(-5, 5), st.integers(-5, 5),
       st.one_of(st.none(), st.integers(-3, 50)))
def test_ellipse_points_matches_brute_force(f, M, D, e1, e2, lower):
    A, B, C = f
    pts, vals = ellipse_points(A, B, C, M * D * D, D, (e1, e2), lower=None if lower is None else lower * D * D)
    got = set(map(tuple, pts.tolist()))
    want = _brute(A, B, C, M * D * D, D, (e1, e2), None if lower is None else lower * D * D)
    assert got == want
    assert len(got) == len(pts)
    assert np.all(np.diff(pts[:, 0]) >= 0)


def test_ellipse_budget():
    with pytest.raises(BudgetExceeded):
        ellipse_points(1, 0, 1, 10**8, budget=1000)


def test_primitive():
    assert primitive(-4, 6) == (2, -3)
    assert primitive(0, -5) == (0, 1)
    with pytest.raises(ValueError):
        primitive(0, 0)

from fractions import Fraction
from math import log, sqrt

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import sieve_represented
from ddlab.errors import ParseError, PreconditionError, TheoremViolation
from ddlab.lattice import QuadForm
from ddlab.lattice import builtin
from ddlab.represented import (bernays_estimate, c_hat, census, forward_k, invert_k_to_T, log_grid,
                               palette_args, palette_bounds_check, read_cache, reduced_form, represented_upto,
                               write_cache)
from ddlab.spectrum import distance_spectrum
from ddlab.windows import build_disk_window, disk_cert

SUM2 = QuadForm(1, 0, 1)
EIS = QuadForm(1, 1, 1)


def brute_values(form, T):
    R = int(sqrt(4 * max(form.a, form.c) * T)) + 2
    out = set()
    for x in range(-R, R + 1):
        for y in range(-R, R + 1):
            v = form.a * x * x + form.b * x * y + form.c * y * y
            if 1 <= v <= T:
                out.add(v)
    return sorted(out)


def test_small_examples():
    t = represented_upto(SUM2, 25)
    assert t.values().tolist() == [1, 2, 4, 5, 8, 9, 10, 13, 16, 17, 18, 20, 25]
    assert t.upto(25) == 13 and t.upto(0) == 0
    assert represented_upto(EIS, 7).values().tolist() == [1, 3, 4, 7]
    assert not t.is_represented(0) and not t.is_represented(3)


forms = st.tuples(st.integers(1, 6), st.integers(-6, 6), st.integers(1, 6)).filter(
    lambda f: 4 * f[0] * f[2] - f[1] ** 2 > 0)


@settings(max_examples=40)
@given(forms, st.integers(1, 400))
def test_census_matches_enumeration(f, T):
    form = QuadForm(*f)
    assert represented_upto(form, T).values().tolist() == brute_values(form, T)
    g = reduced_form(form)
    assert g.disc == form.disc


def test_sieve_oracles_agree_at_1e6():
    T = 10**6
    assert np.array_equal(represented_upto(SUM2, T).represented, sieve_represented(T, 4, 3))
    assert np.array_equal(represented_upto(EIS, T).represented, sieve_represented(T, 3, 2))


def test_frozen_counts():
    t = represented_upto(SUM2, 10**6)
    # counts of nonzero sums of two squares up to 10^k, frozen from the sieve oracle
    assert [t.upto(10**k) for k in range(1, 7)] == [7, 43, 330, 2749, 24028, 216341]


def test_cache_roundtrip(tmp_path):
    t = census(SUM2, 5000, tmp_path)
    path = tmp_path / "census_1_0_1.bin"
    assert path.exists()
    u = read_cache(path, SUM2, 5000)
    assert np.array_equal(t.represented, u.represented)
    smaller = census(SUM2, 1000, tmp_path)
    assert np.array_equal(smaller.represented, t.represented[:1001])
    with pytest.raises(ParseError):
        read_cache(path, EIS)
    with pytest.raises(ParseError):
        read_cache(path, SUM2, 10**6)
    bad = tmp_path / "junk.bin"
    bad.write_bytes(b"xx")
    with pytest.raises(ParseError):
        read_cache(bad)


def test_log_grid():
    g = log_grid(10**6)
    assert g[0] == 100 and g[-1] == 10**6 and len(g) == 33
    assert all(b > a for a, b in zip(g, g[1:]))


def test_bernays_estimate_shape():
    est = bernays_estimate(SUM2, log_grid(10**6))
    assert est.counts[-1] == 216341
    assert abs(est.estimates[-1] - c_hat(216341, 10**6)) < 1e-15
    assert 0.7 < est.extrapolated < 0.8
    assert not est.low_confidence
    assert bernays_estimate(SUM2, [100, 1000]).extrapolated is None
    assert bernays_estimate(SUM2, log_grid(5000)).low_confidence
    with pytest.raises(PreconditionError):
        bernays_estimate(SUM2, [1000, 100])


@pytest.mark.parametrize("label,R_sq", [("Z2", 25), ("Z2", 400), ("hex", 25), ("hex", 400)])
def test_palette_sandwich(label, R_sq):
    model = builtin(label)
    W = build_disk_window(model, R_sq=R_sq)
    rep = palette_bounds_check(W, disk_cert(W))
    assert rep.lower <= rep.k <= rep.upper
    assert rep.k == distance_spectrum(W.points).k


def test_palette_args_exact():
    Z = builtin("Z2")
    # (2*5 - 2/sqrt2)^2 = 100 - 20 sqrt2 + 2 = 73.7...
    assert palette_args(Z, 25) == (73, 100)
    H = builtin("hex")
    lo, hi = palette_args(H, 16)
    assert hi == 64 and lo == int((8 - 2 / sqrt(3)) ** 2)


def test_palette_detects_tampering():
    Z = builtin("Z2")
    W = build_disk_window(Z, R_sq=25)
    spec = distance_spectrum(W.points)
    # a well-formed spectrum with too few distances for this window
    fake = type(spec)(spec.keys[:3], np.array([4, 4, 4]), 4, spec.scale_s)
    with pytest.raises(TheoremViolation):
        palette_bounds_check(W, disk_cert(W), spectrum=fake)


@given(st.floats(min_value=2, max_value=10), st.floats(min_value=0.3, max_value=1.5))
def test_inversion_roundtrip(logT, C):
    T = 10 ** logT
    k = forward_k(T, C)
    if k < 3:
        return
    inv = invert_k_to_T(k, C)
    assert abs(inv.T - T) <= 1e-6 * T


def test_inversion_preconditions():
    with pytest.raises(PreconditionError):
        invert_k_to_T(2, 1.0)
    with pytest.raises(PreconditionError):
        invert_k_to_T(100, 0)
    inv = invert_k_to_T(10**6, 0.7642)
    assert abs(inv.correction - sqrt(log(inv.T) / log(10**6))) < 1e-12

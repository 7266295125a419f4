import copy
from fractions import Fraction
from math import log

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import brute_shifts
from ddlab.errors import PreconditionError
from ddlab.lattice import builtin
from ddlab.pointset import LatticePointSet
from ddlab.spectrum import distance_spectrum
from ddlab.stability import (INDETERMINATE, LINE_HEAVY, LOCALIZED, TWO_SHIFT, ClassifierConfig, ball_counts,
                             classify, directional_mass, doubling_popularity, energy_residue_check, line_pair_mass,
                             localize, popular_shift_analysis, top_cap_split, two_shift_pipeline, verify_report)

Z, H = builtin("Z2"), builtin("hex")
point_sets = st.lists(st.tuples(st.integers(-7, 7), st.integers(-7, 7)), min_size=3, max_size=40, unique=True)


def grid(L, a0=(0, 0)):
    return [(a0[0] + i, a0[1] + j) for i in range(L) for j in range(L)]


def grid_plus_outliers(L, m, seed):
    rng = np.random.default_rng(seed)
    pts = set(grid(L))
    while len(pts) < L * L + m:
        pts.add(tuple(int(x) for x in rng.integers(-200, 201, size=2)))
    return sorted(pts)


def test_config_validation_and_roundtrip():
    cfg = ClassifierConfig(sigma="1/8", c_line="1/5")
    assert ClassifierConfig.from_json(cfg.to_json()) == cfg
    with pytest.raises(PreconditionError):
        ClassifierConfig(sigma=Fraction(1, 2))
    with pytest.raises(PreconditionError):
        ClassifierConfig(c_shift=0)
    assert abs(cfg.theta(100) - log(100) ** (-0.625)) < 1e-15
    assert cfg.theta(2) == 1.0


@given(point_sets, st.fractions(min_value=0, max_value=1, max_denominator=20), st.sampled_from(["Z2", "hex"]))
def test_top_cap_bound(pts, theta, label):
    spec = distance_spectrum(LatticePointSet(builtin(label), pts))
    cap = top_cap_split(spec, theta)
    assert cap.top_mass + cap.bottom_mass == len(pts) * (len(pts) - 1)
    assert cap.top_mass ** 2 <= cap.q_ord * cap.L


@settings(max_examples=40)
@given(point_sets, st.integers(1, 60))
def test_ball_counts_brute_force(pts, t):
    X = LatticePointSet(Z, pts)
    got = ball_counts(X, t)
    expect = [sum((x - a) ** 2 + (y - b) ** 2 <= t for a, b in pts) for x, y in pts]
    assert got.tolist() == expect


@settings(max_examples=40)
@given(point_sets)
def test_localization_guarantee(pts):
    X = LatticePointSet(Z, pts)
    spec = distance_spectrum(X)
    for t in spec.keys[::3]:
        loc = localize(X, int(t), Fraction(1, 2), spec)
        if loc.ok:
            assert loc.count >= len(pts) / 2
        else:
            assert spec.mass_upto(int(t)) < Fraction(1, 2) * len(pts) * (len(pts) - 1)


@given(point_sets, st.tuples(st.integers(-3, 3), st.integers(-3, 3)).filter(lambda u: u != (0, 0)))
def test_directional_mass_equals_line_pairs(pts, u):
    from ddlab.spectrum import shift_histogram
    h = shift_histogram(np.array(pts))
    assert directional_mass(h, u) == line_pair_mass(np.array(pts), u)


@given(point_sets, st.sampled_from([Fraction(1, 10), Fraction(1, 4), Fraction(1, 2)]))
def test_popular_shifts_brute_force(pts, rho):
    pop = popular_shift_analysis(np.array(pts), rho)
    shifts = brute_shifts(pts)
    expect = {v for v, r in shifts.items() if r >= rho * len(pts)}
    assert {tuple(v) for v in pop.vectors.tolist()} == expect
    if pop.pair is not None:
        (v1, r1), (v2, r2) = pop.pair
        assert v1[0] * v2[1] - v1[1] * v2[0] != 0
        best = max(min(shifts[a], shifts[b]) for a in expect for b in expect
                   if a[0] * b[1] - a[1] * b[0] != 0)
        assert min(r1, r2) == best
    elif expect:
        assert all(v[0] * pop.direction[1] - v[1] * pop.direction[0] == 0 for v in expect)


@given(st.lists(st.tuples(st.integers(0, 12), st.integers(0, 12)), min_size=1, max_size=80, unique=True),
       st.sampled_from([Fraction(1, 10), Fraction(1, 3)]))
def test_energy_residue(pts, alpha):
    rep = energy_residue_check(pts, alpha)
    assert rep.energy <= 4 * rep.N ** 2 * rep.max_size
    if rep.energy >= alpha * rep.N ** 3:
        assert rep.max_size >= alpha * rep.N / 4


def test_collinear_is_line_heavy():
    X = LatticePointSet(Z, [(i, 2 * i) for i in range(30)])
    rep = classify(X)
    assert rep.outcome == LINE_HEAVY and rep.certificate["s"] == 30
    assert verify_report(X, rep)


@pytest.mark.parametrize("L", [8, 12, 20])
def test_grid_is_two_shift(L):
    X = LatticePointSet(Z, grid(L, (3, -5)))
    rep = classify(X)
    assert rep.outcome == TWO_SHIFT
    c = rep.certificate
    assert max(c["residue_sizes"].values()) >= c["N"] / 4
    assert verify_report(X, rep)


def test_grid_plus_outliers_is_localized():
    X = LatticePointSet(Z, grid_plus_outliers(8, 50, 1))
    rep = classify(X)
    assert rep.outcome == LOCALIZED
    eta = Fraction(rep.certificate["eta"])
    assert rep.certificate["count"] >= (1 - eta) * X.n
    assert verify_report(X, rep)


def test_tampered_certificates_fail():
    for pts in ([(i, 2 * i) for i in range(30)], grid(10), grid_plus_outliers(8, 50, 1)):
        X = LatticePointSet(Z, pts)
        js = classify(X).to_json()
        assert verify_report(X, js)
        bad = copy.deepcopy(js)
        cert = bad["certificate"]
        for key in ("s", "count", "overlap1"):
            if key in cert:
                cert[key] += 1
        assert not verify_report(X, bad)
        bad = copy.deepcopy(js)
        bad["k"] += 1
        assert not verify_report(X, bad)


@settings(max_examples=25)
@given(point_sets)
def test_every_report_verifies(pts):
    X = LatticePointSet(H, pts)
    rep = classify(X)
    assert rep.outcome in (LINE_HEAVY, TWO_SHIFT, LOCALIZED, INDETERMINATE)
    assert verify_report(X, rep.to_json())


def test_pipeline_fail_reasons():
    line = np.array([(i, 0) for i in range(12)])
    assert two_shift_pipeline(line).reason == "no-nonparallel-shifts"
    with pytest.raises(PreconditionError):
        classify(LatticePointSet(Z, [(0, 0), (1, 0)]))


def test_doubling_popularity():
    d = doubling_popularity(grid(5))
    assert d.size == 25 and d.difference_set == 81
    assert d.K == Fraction(81, 25)
    # r(v) >= 25 / (2K) = 625 / 162, i.e. r(v) >= 4; r(u) = (5 - |u1|)(5 - |u2|)
    expect = sum((5 - abs(a)) * (5 - abs(b)) >= 4 for a in range(-4, 5) for b in range(-4, 5))
    assert d.popular == expect
    with pytest.raises(PreconditionError):
        doubling_popularity(np.zeros((0, 2)))

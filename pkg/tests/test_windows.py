from fractions import Fraction
from math import floor, pi, sqrt

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from conftest import brute_shifts
from ddlab.errors import PreconditionError, TheoremViolation
from ddlab.lattice import builtin
from ddlab.pointset import LatticePointSet
from ddlab.spectrum import additive_energy
from ddlab.windows import (LambdaRectangle, build_disk_window, certify_inner_regular, convex_count_error,
                           disk_cert, extract_square_window, find_heavy_shifts, gap_hull, heavy_shift_bound,
                           inner_core, lens_count, rect_energy_exact, rect_rep_count, verify_diffset_covering,
                           verify_inner_regular_pairs, window_energy)

Z, H = builtin("Z2"), builtin("hex")


def brute_disk(model, tau, z, R_sq, span):
    """Exact-rational enumeration of tau + Lambda inside the closed disk."""
    tau = [Fraction(t) for t in tau]
    z = [Fraction(t) for t in z]
    out = []
    for i in range(-span, span + 1):
        for j in range(-span, span + 1):
            x, y = i + tau[0] - z[0], j + tau[1] - z[1]
            if model.q(x, y) <= Fraction(R_sq):
                out.append((i, j))
    return sorted(out)


def test_disk_examples():
    W = build_disk_window(Z, R_sq=2)
    assert W.n == 9
    W = build_disk_window(H, R_sq=1)
    assert W.n == 7
    W = build_disk_window(Z, R_sq=Fraction(1, 2), z=(Fraction(1, 2), Fraction(1, 2)))
    assert W.n == 4
    with pytest.raises(PreconditionError):
        build_disk_window(Z, R_sq=Fraction(1, 5), z=(Fraction(1, 2), Fraction(1, 2)))


rationals = st.fractions(min_value=-2, max_value=2, max_denominator=6)


@settings(max_examples=60)
@given(st.sampled_from(["Z2", "hex"]), st.tuples(rationals, rationals), st.tuples(rationals, rationals),
       st.fractions(min_value=Fraction(1, 2), max_value=20, max_denominator=7))
def test_disk_matches_rational_enumeration(label, tau, z, R_sq):
    model = builtin(label)
    expected = brute_disk(model, tau, z, R_sq, 9)
    assume(expected)
    W = build_disk_window(model, tau, z, R_sq)
    assert sorted(map(tuple, W.points.points.tolist())) == expected


def test_rectangle_closed_forms():
    for L1, L2 in [(2, 2), (3, 2), (5, 4), (1, 6)]:
        P = LambdaRectangle((0, 0), L1, L2)
        pts = P.points()
        assert rect_energy_exact(L1, L2) == additive_energy(pts).energy_with_diagonal
        shifts = brute_shifts([tuple(p) for p in pts.tolist()])
        for (u1, u2), r in shifts.items():
            assert rect_rep_count(L1, L2, u1, u2) == r
    assert rect_energy_exact(2, 2) == 36 and rect_energy_exact(3, 2) == 114
    assert rect_rep_count(3, 3, 3, 0) == 0
    assert not LambdaRectangle((0, 0), 1, 5).proper
    assert LambdaRectangle((2, 3), 2, 2).contains([(2, 3), (4, 3)]).tolist() == [True, False]


def brute_heavy(g, L, axis):
    best = None
    for s in range(1, L):
        for eps in (-1, 1):
            if axis == 0:
                ov = int((g[s:, :] * g[:-s, :]).sum())
            else:
                ov = int((g[:, s:] * g[:, :-s]).sum())
            if best is None or ov > best[2]:
                best = (s, eps, ov)
    return best


@given(st.integers(2, 9), st.integers(2, 9), st.data())
def test_heavy_shifts(L1, L2, data):
    cells = [(i, j) for i in range(L1) for j in range(L2)]
    A = data.draw(st.lists(st.sampled_from(cells), min_size=1, unique=True))
    hs = find_heavy_shifts(A, L1, L2)
    g = np.zeros((L1, L2), dtype=int)
    for i, j in A:
        g[i, j] = 1
    # overlap |A & (A + s e1)| by counting directly
    assert hs.overlap1 == sum((i + hs.s, j) in set(A) for i, j in A)
    assert hs.overlap1 == brute_heavy(g, L1, 0)[2]
    assert hs.overlap2 == brute_heavy(g, L2, 1)[2]
    assert hs.ok
    beta = Fraction(len(A), L1 * L2)
    assert hs.bound1 == heavy_shift_bound(beta, L1, len(A))


@given(st.integers(2, 8), st.data())
def test_square_window_density(L2, data):
    L1 = data.draw(st.integers(L2, 3 * L2))
    cells = [(i, j) for i in range(L1) for j in range(L2)]
    A = data.draw(st.lists(st.sampled_from(cells), min_size=1, unique=True))
    sw = extract_square_window(A, L1, L2)
    assert 0 <= sw.start <= L1 - L2
    inside = sum(sw.start <= i < sw.start + L2 for i, _ in A)
    assert inside == sw.count
    assert sw.density >= sw.beta / 2


def test_square_window_rejects_bad_shape():
    with pytest.raises(PreconditionError):
        extract_square_window([(0, 0)], 2, 3)


@given(st.integers(-3, 3), st.integers(-3, 3), st.integers(1, 5), st.integers(1, 5),
       st.lists(st.tuples(st.integers(-4, 4), st.integers(-4, 4)), min_size=1, max_size=6))
def test_gap_hull_brute_force(a, b, L1, L2, T):
    P = LambdaRectangle((a, b), L1, L2)
    hull = gap_hull(P, T)
    R = hull.rectangle()
    cover = {tuple(p + np.array(t)) for t in T for p in P.points()}
    assert all(R.contains([c])[0] for c in cover)
    # minimal: every side of the hull is touched
    xs = [c[0] for c in cover]
    ys = [c[1] for c in cover]
    assert (min(xs), min(ys)) == hull.a0
    assert max(xs) - min(xs) + 1 == hull.L1 and max(ys) - min(ys) + 1 == hull.L2


def brute_covering_key(W, model):
    """Largest K such that every nonzero v with key <= K is a difference, by direct search."""
    diffs = set(brute_shifts([tuple(p) for p in W.points.points.tolist()]))
    F = model.form
    R = 2 * int(sqrt(float(W.R_sq) / float(model.lambda1_sq))) + 3
    missing = [F.a * i * i + F.b * i * j + F.c * j * j
               for i in range(-R, R + 1) for j in range(-R, R + 1)
               if (i, j) != (0, 0) and (i, j) not in diffs]
    return min(missing) - 1


@pytest.mark.parametrize("label,R_sq,z", [
    ("Z2", 9, (0, 0)), ("Z2", 20, (Fraction(1, 3), Fraction(1, 2))),
    ("hex", 16, (0, 0)), ("hex", 10, (Fraction(2, 3), Fraction(1, 3))),
])
def test_diffset_covering(label, R_sq, z):
    model = builtin(label)
    W = build_disk_window(model, z=z, R_sq=R_sq)
    rep = verify_diffset_covering(W)
    assert rep.ok
    assert rep.largest_covered_key == brute_covering_key(W, model)
    assert rep.guaranteed_key <= rep.largest_covered_key
    # 2R - 2mu in key units, computed in floating point with a safety margin
    K_float = (2 * sqrt(R_sq) - 2 * sqrt(float(model.covering_radius_sq))) ** 2 / float(model.scale_s)
    assert abs(rep.guaranteed_key - floor(K_float)) <= 1


def test_covering_frozen_values():
    assert verify_diffset_covering(build_disk_window(Z, R_sq=9)).guaranteed_key == 21
    rep = verify_diffset_covering(build_disk_window(H, R_sq=16))
    assert (rep.guaranteed_key, rep.largest_covered_key) == (46, 60)


def test_inner_regular_certificate():
    W = build_disk_window(Z, R_sq=100)
    cert = disk_cert(W, Fraction(1, 10))
    assert cert.aspect_bound == 1.0
    # dropping a point near the centre breaks the certificate
    pts = [p for p in W.points.points.tolist() if p != [0, 0]]
    with pytest.raises(TheoremViolation):
        certify_inner_regular(Z, LatticePointSet(Z, pts), (0, 0), 100, Fraction(1, 10))
    # dropping a rim point is allowed when c > 0
    rim = [p for p in W.points.points.tolist() if p != [10, 0]]
    certify_inner_regular(Z, LatticePointSet(Z, rim), (0, 0), 100, Fraction(1, 10))
    with pytest.raises(PreconditionError):
        certify_inner_regular(Z, W.points, (0, 0), 100, Fraction(99, 100))


def test_inner_core():
    W = build_disk_window(H, R_sq=400)
    rep = inner_core(W, disk_cert(W, 0))
    assert rep.shift_stable and rep.removed > 0
    assert rep.ratio < 10


def test_lens_count_frozen_and_bounded():
    lc = lens_count(Z, (0, 0), (0, 0), 100, (10, 0))
    assert lc.count == 127
    assert abs(lc.area - (2 * 100 * np.arccos(0.5) - 5 * sqrt(300))) < 1e-9
    assert lens_count(Z, (0, 0), (0, 0), 4, (5, 0)).count == 0
    for u in [(0, 0), (3, 4), (7, -2)]:
        lc = lens_count(H, (0, 0), (Fraction(1, 3), 0), 50, u, C_lattice=3)
        assert lc.normalized_residual < 3


@settings(max_examples=30)
@given(st.sampled_from(["Z2", "hex"]), st.fractions(min_value=1, max_value=60, max_denominator=5),
       st.tuples(rationals, rationals))
def test_convex_disk_count(label, R_sq, z):
    model = builtin(label)
    cc = convex_count_error(model, {"disk": (z, R_sq)})
    assert cc.count == len(brute_disk(model, (0, 0), z, R_sq, 12))
    assert abs(cc.residual) <= 4 * (1 + cc.perimeter)


def test_convex_polygon_counts():
    sq = convex_count_error(Z, {"polygon": [(0, 0), (3, 0), (3, 3), (0, 3)]})
    assert (sq.count, sq.area_over_covolume) == (16, 9.0)
    tri = convex_count_error(Z, {"polygon": [(0, 0), (0, 4), (4, 0)]})
    assert tri.count == 15          # Pick: A = 8, boundary 12, interior 3
    seg = convex_count_error(Z, {"polygon": [(0, 0), (4, 2)]})
    assert seg.count == 3
    pt = convex_count_error(Z, {"polygon": [(1, 1)]}, tau=(Fraction(1, 2), 0))
    assert pt.count == 0


def test_inner_regular_pairs():
    W = build_disk_window(H, R_sq=900)
    rep = verify_inner_regular_pairs(W, disk_cert(W, 0), Fraction(1, 10), Fraction(1, 10))
    assert rep.lens_ok and rep.deletion_ok and rep.diameter_ok
    assert rep.kappa > 0.2


def test_window_energy_matches():
    W = build_disk_window(Z, R_sq=8)
    assert window_energy(W.points.points) == additive_energy(W.points).energy_with_diagonal

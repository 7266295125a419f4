import os
from fractions import Fraction
from itertools import combinations, product

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ACCEPTANCE = {}


def record(criterion: int, passed: bool, detail: str) -> None:
    ACCEPTANCE[criterion] = (passed, detail)


@pytest.fixture
def acceptance():
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for c in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[c]
        terminalreporter.write_line(f"criterion {c}: {'PASS' if ok else 'FAIL'}  {detail}")


# independent brute-force oracles (plain Python, Fractions, no package code)

def gram_q(gram, u):
    (g11, g12), (_, g22) = gram
    return Fraction(g11) * u[0] ** 2 + 2 * Fraction(g12) * u[0] * u[1] + Fraction(g22) * u[1] ** 2


def brute_distances(gram, pts):
    """Ordered-pair multiplicities of squared distances, as {Fraction: m}."""
    out = {}
    for p, q in product(pts, repeat=2):
        if p == q:
            continue
        d = gram_q(gram, (q[0] - p[0], q[1] - p[1]))
        out[d] = out.get(d, 0) + 1
    return out


def brute_shifts(pts):
    out = {}
    for p, q in product(pts, repeat=2):
        if p != q:
            v = (q[0] - p[0], q[1] - p[1])
            out[v] = out.get(v, 0) + 1
    return out


def brute_lines(pts):
    """Number of points on each line through >= 2 points, lines as frozensets."""
    lines = set()
    for p, q in combinations(pts, 2):
        on = frozenset(r for r in pts
                       if (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]) == 0)
        lines.add(on)
    return sorted(len(s) for s in lines)


Z2_GRAM = ((1, 0), (0, 1))
HEX_GRAM = ((1, Fraction(1, 2)), (Fraction(1, 2), 1))


def rand_points(rng, n, box):
    pts = {tuple(int(x) for x in rng.integers(-box, box + 1, 2)) for _ in range(3 * n)}
    return sorted(pts)[:n]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def primes_upto(N):
    is_p = np.ones(N + 1, dtype=bool)
    is_p[:2] = False
    for p in range(2, int(N ** 0.5) + 1):
        if is_p[p]:
            is_p[p * p::p] = False
    return np.flatnonzero(is_p)


def sieve_represented(T, modulus, bad_residue):
    """n in [1, T] such that every prime p = bad_residue (mod modulus) divides n to an even power.

    With (4, 3) this is the set of sums of two squares, with (3, 2) the
    integers represented by x^2 + xy + y^2. Index 0 is False.
    """
    bad = np.zeros(T + 1, dtype=bool)
    for p in primes_upto(T):
        p = int(p)
        if p % modulus != bad_residue:
            continue
        if p * p > T:
            bad[p::p] = True
            continue
        parity = np.zeros(T + 1, dtype=bool)
        q = p
        while q <= T:
            parity[q::q] ^= True
            q *= p
        bad |= parity
    out = ~bad
    out[0] = False
    return out

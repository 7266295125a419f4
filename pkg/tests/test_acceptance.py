"""End-to-end acceptance criteria 1-8. Each test records one PASS/FAIL line,
printed in the terminal summary, then asserts."""

import time
from fractions import Fraction
from math import log
from pathlib import Path

import numpy as np
import pytest

from conftest import sieve_represented
from ddlab.bench import REGRESSION_FACTOR, bench_spectrum, check_regression
from ddlab.extremal import construct_for_k, upper_bound_curve
from ddlab.lattice import QuadForm, builtin
from ddlab.pointset import LatticePointSet
from ddlab.represented import bernays_estimate, c_hat, forward_k, invert_k_to_T, log_grid, represented_upto
from ddlab.stability import LINE_HEAVY, LOCALIZED, TWO_SHIFT, classify, verify_report
from ddlab.suites import run_suite

BASELINE = Path(__file__).resolve().parents[1] / "benchmarks" / "baseline.json"


def test_criterion_1_exact_identities(acceptance):
    t0 = time.perf_counter()
    names = {
        "quadruple-identity": 200,   # random sets, n <= 40
        "line-identity": 1000,
        "rect-closed-forms": None,   # every L1, L2 <= 8
        "residue-energy": 1000,
        "top-cap": 1000,
        "localization": 1000,
        "square-window": 1000,
    }
    results = {name: run_suite(name, trials, seed=1, nmax=40 if name == "quadruple-identity" else None)
               for name, trials in names.items()}
    dt = time.perf_counter() - t0
    failed = [n for n, r in results.items() if not r.passed]
    trials = sum(r.trials for r in results.values())
    ok = not failed and results["quadruple-identity"].trials == 200 and dt <= 300
    acceptance(1, ok, f"{len(results)} suites, {trials} instances, failed={failed}, {dt:.1f}s")
    assert ok, {n: results[n].failures[:3] for n in failed}


def test_criterion_2_covering(acceptance):
    t0 = time.perf_counter()
    res = run_suite("diffset-covering")
    dt = time.perf_counter() - t0
    ok = res.passed and res.trials == 2 * 59 and dt <= 120
    acceptance(2, ok, f"{res.trials} windows (R up to 60 on Z2 and hex), failures={len(res.failures)}, {dt:.1f}s")
    assert ok, res.failures


def test_criterion_3_palette(acceptance):
    from ddlab.extremal import disk_palette_size
    t0 = time.perf_counter()
    res = run_suite("palette")
    # the fast annulus count is a second, independent route to the same k
    mism = []
    for key, (lo, k, hi) in res.stats.items():
        label, R = key.split(":R=")
        k_fast = disk_palette_size(builtin(label), R_sq=int(R) ** 2)
        if k_fast != k:
            mism.append(key)
    dt = time.perf_counter() - t0
    ok = res.passed and res.trials == 10 and not mism and dt <= 600
    acceptance(3, ok, f"{res.trials} windows, failures={len(res.failures)}, route mismatches={mism}, {dt:.1f}s")
    assert ok, (res.failures, mism)


def test_criterion_4_bernays_census(acceptance):
    t0 = time.perf_counter()
    form = QuadForm(1, 0, 1)
    big = represented_upto(form, 10**8)
    # exact census at 10^7 against the prime-factorization characterization
    small = represented_upto(form, 10**7)
    oracle = sieve_represented(10**7, 4, 3)
    exact = bool(np.array_equal(small.represented, oracle)) and small.count == int(oracle.sum())
    assert np.array_equal(big.represented[:10**7 + 1], small.represented)
    c7, c8 = c_hat(big.upto(10**7), 10**7), c_hat(big.upto(10**8), 10**8)
    e7 = bernays_estimate(form, log_grid(10**7), big).extrapolated
    e8 = bernays_estimate(form, log_grid(10**8), big).extrapolated
    d_hat = abs(c7 - c8) / c8
    d_ext = abs(e7 - e8) / e8
    dt = time.perf_counter() - t0
    ok = exact and d_hat <= 0.03 and d_ext <= 0.01 and dt <= 1200
    acceptance(4, ok, f"R(1e7)={small.count} exact={exact}; C_hat {c7:.4f} vs {c8:.4f} ({d_hat:.2%}); "
                      f"extrapolated {e7:.4f} vs {e8:.4f} ({d_ext:.2%}); {dt:.1f}s")
    assert ok


def test_criterion_5_scale_law(acceptance):
    t0 = time.perf_counter()
    hex_ = builtin("hex")
    table = represented_upto(hex_.form, 10**7)
    C = bernays_estimate(hex_.form, log_grid(10**7), table).extrapolated
    ks = [10**3, 10**4, 10**5, 10**6]
    wits = [construct_for_k(hex_, k, C_est=C, table=table) for k in ks]
    ratios = [w.ratio_n for w in wits]
    steps = [abs(b - a) for a, b in zip(ratios, ratios[1:])]
    decreasing = [b < a for a, b in zip(steps, steps[1:])]
    in_band = all(0.2 <= r <= 3 for r in ratios)
    preds = [(w.ratio_pred_a, w.ratio_pred_b) for w in wits]
    emitted = all(a is not None and b is not None and a > 0 and b > 0 for a, b in preds)
    dt = time.perf_counter() - t0
    ok = in_band and all(decreasing) and emitted and dt <= 1800
    acceptance(5, ok, "ratios " + ", ".join(f"{r:.4f}" for r in ratios)
               + f"; step variation {', '.join(f'{s:.4f}' for s in steps)}"
               + f"; (pi/4)S*={preds[0][0]:.4f}, pi/(3C)={preds[0][1]:.4f} (C={C:.4f}); {dt:.1f}s")
    assert ok


def test_criterion_6_inversion(acceptance):
    C = 0.7642
    Ts = np.logspace(2, 10, 161)
    worst = max(abs(invert_k_to_T(forward_k(T, C), C).T - T) / T for T in Ts)
    ks = np.logspace(3, 9, 61)
    curve = upper_bound_curve(ks, 1.0)
    dominated = all(c >= f for c, f in zip(curve.closed_form, curve.fixed_point))
    fixed_ok = all(abs(f - k * log(f)) <= 1e-9 * f for k, f in zip(ks, curve.fixed_point))
    ok = worst <= 1e-6 and dominated and fixed_ok
    acceptance(6, ok, f"round-trip worst rel. error {worst:.2e} over {len(Ts)} T in [1e2, 1e10]; "
                      f"closed form dominates fixed point at {len(ks)} k >= 1e3: {dominated}")
    assert ok


def test_criterion_7_classifier(acceptance):
    t0 = time.perf_counter()
    Z = builtin("Z2")
    rng = np.random.default_rng(7)
    cases = []
    line = LatticePointSet(Z, [(3 * i, -i) for i in range(40)])
    cases.append(("collinear", line, LINE_HEAVY))
    for L in (8, 12, 16):
        cases.append((f"grid{L}", LatticePointSet(Z, [(i, j) for i in range(L) for j in range(L)]), TWO_SHIFT))
    pts = {(i, j) for i in range(8) for j in range(8)}
    while len(pts) < 64 + 50:
        pts.add(tuple(int(x) for x in rng.integers(-200, 201, size=2)))
    cases.append(("grid+outliers", LatticePointSet(Z, sorted(pts)), LOCALIZED))
    problems = []
    for name, X, want in cases:
        rep = classify(X)
        c = rep.certificate
        if rep.outcome != want:
            problems.append(f"{name}: {rep.outcome}")
            continue
        if want == TWO_SHIFT and max(c["residue_sizes"].values()) * 4 < c["N"]:
            problems.append(f"{name}: residue bucket")
        if want == LOCALIZED and c["count"] < (1 - Fraction(c["eta"])) * X.n:
            problems.append(f"{name}: ball count")
        if not verify_report(X, rep.to_json()):
            problems.append(f"{name}: certificate does not re-verify")
    dt = time.perf_counter() - t0
    ok = not problems and dt <= 120
    acceptance(7, ok, f"{len(cases)} inputs, problems={problems}, {dt:.1f}s")
    assert ok


def test_criterion_8_performance(acceptance):
    res = bench_spectrum(10**6, "hex", repeat=3)   # best of 3, same statistic as the baseline
    reg = check_regression(res, BASELINE, record_if_missing=True)
    base = "recorded now" if reg["baseline"] is None else f"baseline {reg['baseline']:.2f}s, ratio {reg['ratio']:.2f}"
    ok = res["n"] >= 10**6 * 0.99 and not reg["regressed"]
    acceptance(8, ok, f"{res['n']}-point hex window, k={res['k']}, {res['seconds']:.2f}s ({base}; "
                      f"fails above {REGRESSION_FACTOR}x)")
    assert ok

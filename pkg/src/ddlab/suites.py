"""Seeded property sweeps. Each compares two independent computations or
checks an inequality that must hold on every instance; theorem suites allow
zero failures."""

from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil

import numpy as np

from .errors import PreconditionError, TheoremViolation
from .lattice import builtin
from .pointset import LatticePointSet
from .spectrum import additive_energy, distance_spectrum, line_histogram, shift_histogram


@dataclass
class SuiteResult:
    name: str
    trials: int = 0
    failures: list = field(default_factory=list)
    theorem: bool = True
    stats: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.failures

    def fail(self, **info):
        if len(self.failures) < 20:
            self.failures.append(info)
        else:
            self.stats["more_failures"] = self.stats.get("more_failures", 0) + 1

    def to_json(self) -> dict:
        return {"suite": self.name, "pass": self.passed, "trials": self.trials, "theorem": self.theorem,
                "failures": self.failures, "stats": self.stats}


def random_set(rng, model, n, box):
    pts = rng.integers(-box, box + 1, size=(4 * n, 2))
    _, idx = np.unique(pts, axis=0, return_index=True)
    pts = pts[np.sort(idx)][:n]
    return LatticePointSet(model, pts)


def random_subset_of_rect(rng, L1, L2, p=None):
    p = rng.uniform(0.05, 1.0) if p is None else p
    g = np.argwhere(rng.random((L1, L2)) < p)
    if len(g) == 0:
        g = np.array([[rng.integers(L1), rng.integers(L2)]])
    return g


def _models():
    return [builtin("Z2"), builtin("hex")]


def suite_quadruple_identity(trials=200, seed=0, nmax=40):
    from .isometry import isometry_spectrum, translation_identity_rhs
    res = SuiteResult("quadruple-identity")
    rng = np.random.default_rng(seed)
    for t in range(trials):
        model = _models()[t % 2]
        n = int(rng.integers(2, nmax + 1))
        X = random_set(rng, model, n, int(rng.integers(2, 9)))
        if X.n < 2:
            continue
        iso = isometry_spectrum(X)
        res.trials += 1
        if not (iso.identity_sum == iso.q_ord == iso.q_star):
            res.fail(trial=t, n=X.n, identity=iso.identity_sum, q_ord=iso.q_ord, q_star=iso.q_star)
        if iso.translation_pairs != translation_identity_rhs(X):
            res.fail(trial=t, n=X.n, translation=iso.translation_pairs)
    return res


def suite_line_identity(trials=1000, seed=0, nmax=50):
    res = SuiteResult("line-identity")
    rng = np.random.default_rng(seed)
    for t in range(trials):
        n = int(rng.integers(2, nmax + 1))
        X = random_set(rng, builtin("Z2"), n, int(rng.integers(1, 12)))
        if X.n < 2:
            continue
        res.trials += 1
        lh = line_histogram(X)
        if lh.pair_total() != X.n * (X.n - 1) // 2:
            res.fail(trial=t, n=X.n, total=lh.pair_total())
    return res


def suite_rect_closed_forms(Lmax=8):
    from .windows import rect_energy_exact, rect_rep_count
    res = SuiteResult("rect-closed-forms")
    for L1 in range(1, Lmax + 1):
        for L2 in range(1, Lmax + 1):
            res.trials += 1
            pts = np.array([(i, j) for i in range(L1) for j in range(L2)])
            en = additive_energy(pts)
            if en.energy_with_diagonal != rect_energy_exact(L1, L2):
                res.fail(L1=L1, L2=L2, brute=en.energy_with_diagonal)
            h = en.hist.as_dict()
            for u1 in range(-L1 - 1, L1 + 2):
                for u2 in range(-L2 - 1, L2 + 2):
                    want = L1 * L2 if (u1, u2) == (0, 0) else h.get((u1, u2), 0)
                    if rect_rep_count(L1, L2, u1, u2) != want:
                        res.fail(L1=L1, L2=L2, u=(u1, u2))
    return res


def suite_residue_energy(trials=1000, seed=0):
    from .stability import energy_residue_check
    res = SuiteResult("residue-energy")
    rng = np.random.default_rng(seed)
    for t in range(trials):
        A = random_subset_of_rect(rng, int(rng.integers(1, 13)), int(rng.integers(1, 13)))
        res.trials += 1
        try:
            energy_residue_check(A, Fraction(1, 10))
        except Exception as e:  # noqa: BLE001 - any violation is a failure
            res.fail(trial=t, error=str(e))
    return res


def suite_top_cap(trials=1000, seed=0, nmax=50):
    from .stability import top_cap_split
    res = SuiteResult("top-cap")
    rng = np.random.default_rng(seed)
    for t in range(trials):
        X = random_set(rng, _models()[t % 2], int(rng.integers(2, nmax + 1)), int(rng.integers(1, 10)))
        if X.n < 2:
            continue
        spec = distance_spectrum(X)
        theta = Fraction(int(rng.integers(0, 101)), 100)
        res.trials += 1
        try:
            top_cap_split(spec, theta)
        except TheoremViolation:
            res.fail(trial=t)
    return res


def suite_localization(trials=1000, seed=0, nmax=40):
    """Whenever the pair mass up to t is at least (1 - eta) n (n - 1), some ball meets (1 - eta) n."""
    from .stability import ball_counts
    res = SuiteResult("localization")
    rng = np.random.default_rng(seed)
    fired = 0
    for t in range(trials):
        model = _models()[t % 2]
        n = int(rng.integers(2, nmax + 1))
        if rng.random() < 0.5:
            X = random_set(rng, model, n, int(rng.integers(1, 8)))
        else:  # clustered: a dense blob plus a few far points
            core = rng.integers(-3, 4, size=(n, 2))
            far = rng.integers(-60, 61, size=(int(rng.integers(0, 4)), 2))
            X = LatticePointSet(model, np.vstack([core, far]))
        if X.n < 2:
            continue
        spec = distance_spectrum(X)
        j = int(rng.integers(0, spec.k))
        t_key = int(spec.keys[j])
        eta = Fraction(int(rng.integers(1, 100)), 100)
        res.trials += 1
        if spec.mass_upto(t_key) >= (1 - eta) * X.n * (X.n - 1):
            fired += 1
            best = int(ball_counts(X, t_key).max())
            if best < (1 - eta) * X.n:
                res.fail(trial=t, n=X.n, best=best)
    res.stats["precondition_held"] = fired
    return res


def suite_square_window(trials=1000, seed=0):
    from .windows import extract_square_window
    res = SuiteResult("square-window")
    rng = np.random.default_rng(seed)
    for t in range(trials):
        L2 = int(rng.integers(2, 9))
        L1 = int(rng.integers(L2, 25))
        A = random_subset_of_rect(rng, L1, L2)
        res.trials += 1
        try:
            sq = extract_square_window(A, L1, L2)
        except Exception as e:  # noqa: BLE001
            res.fail(trial=t, error=str(e))
            continue
        # independent recount from the returned block
        cnt = int(np.count_nonzero((A[:, 0] >= sq.start) & (A[:, 0] < sq.start + L2)))
        beta = Fraction(len(A), L1 * L2)
        if cnt != sq.count or Fraction(cnt, L2 * L2) < beta / 2:
            res.fail(trial=t, L=(L1, L2), count=cnt)
    return res


def suite_heavy_shifts(trials=200, seed=0):
    from .windows import find_heavy_shifts
    res = SuiteResult("heavy-shifts")
    rng = np.random.default_rng(seed)
    for t in range(trials):
        L1, L2 = int(rng.integers(2, 12)), int(rng.integers(2, 12))
        A = random_subset_of_rect(rng, L1, L2)
        hs = find_heavy_shifts(A, L1, L2)
        h = shift_histogram(A) if len(A) > 1 else None
        res.trials += 1
        r1 = h.r((hs.eps1 * hs.s, 0)) if h else 0
        r2 = h.r((0, hs.eps2 * hs.t)) if h else 0
        if not hs.ok or r1 != hs.overlap1 or r2 != hs.overlap2:
            res.fail(trial=t, L=(L1, L2))
    return res


def suite_gap_hull(trials=300, seed=0):
    from .windows import LambdaRectangle, gap_hull
    res = SuiteResult("gap-hull")
    rng = np.random.default_rng(seed)
    for t in range(trials):
        P = LambdaRectangle(tuple(int(x) for x in rng.integers(-5, 6, 2)), int(rng.integers(1, 7)),
                            int(rng.integers(1, 7)))
        T = rng.integers(-5, 6, size=(int(rng.integers(1, 6)), 2))
        hull = gap_hull(P, T)
        res.trials += 1
        pts = np.concatenate([P.points() + tt for tt in T])
        if not hull.rectangle().contains(pts).all():
            res.fail(trial=t)
    return res


def suite_diffset_covering(lattices=("Z2", "hex"), R_max=60):
    from .windows import build_disk_window, verify_diffset_covering
    res = SuiteResult("diffset-covering")
    for label in lattices:
        model = builtin(label)
        for R in range(ceil(model.mu) + 1, R_max + 1):
            w = build_disk_window(model, R_sq=R * R)
            rep = verify_diffset_covering(w)
            res.trials += 1
            if not rep.ok:
                res.fail(lattice=label, R=R, missing=rep.missing[:5])
    return res


def suite_palette(lattices=("Z2", "hex"), radii=(5, 10, 20, 40, 80)):
    from .represented import palette_args, represented_upto
    from .windows import build_disk_window, disk_cert
    from .represented import palette_bounds_check
    res = SuiteResult("palette")
    for label in lattices:
        model = builtin(label)
        table = represented_upto(model.form, palette_args(model, max(radii) ** 2)[1])
        for R in radii:
            w = build_disk_window(model, R_sq=R * R)
            res.trials += 1
            try:
                rep = palette_bounds_check(w, disk_cert(w), table)
                res.stats[f"{label}:R={R}"] = [rep.lower, rep.k, rep.upper]
            except Exception as e:  # noqa: BLE001
                res.fail(lattice=label, R=R, error=str(e))
    return res


def suite_cs_floor(trials=1000, seed=0, nmax=50):
    res = SuiteResult("cs-floor")
    rng = np.random.default_rng(seed)
    for t in range(trials):
        X = random_set(rng, _models()[t % 2], int(rng.integers(2, nmax + 1)), int(rng.integers(1, 10)))
        if X.n < 2:
            continue
        spec = distance_spectrum(X)
        res.trials += 1
        if spec.q_ord() < spec.cs_floor():
            res.fail(trial=t)
    return res


def suite_directional_mass(trials=50, seed=0, directions=20):
    from .stability import directional_mass, line_pair_mass
    res = SuiteResult("directional-mass")
    rng = np.random.default_rng(seed)
    for t in range(trials):
        X = random_set(rng, builtin("Z2"), int(rng.integers(2, 60)), int(rng.integers(2, 8)))
        if X.n < 2:
            continue
        h = shift_histogram(X)
        for _ in range(directions):
            u = rng.integers(-4, 5, 2)
            if not u.any():
                continue
            res.trials += 1
            if directional_mass(h, u) != line_pair_mass(X, u):
                res.fail(trial=t, u=u.tolist())
    return res


def suite_doubling_popularity(trials=300, seed=0):
    from .stability import doubling_popularity
    res = SuiteResult("doubling-popularity")
    rng = np.random.default_rng(seed)
    for t in range(trials):
        if t % 2:
            A = random_subset_of_rect(rng, int(rng.integers(1, 10)), int(rng.integers(1, 10)))
        else:
            A = rng.integers(-20, 21, size=(int(rng.integers(1, 40)), 2))
            A = np.unique(A, axis=0)
        dp = doubling_popularity(A)
        res.trials += 1
        if 2 * dp.popular < dp.size:
            res.fail(trial=t, size=dp.size, popular=dp.popular)
    return res


SUITES = {
    "quadruple-identity": suite_quadruple_identity,
    "line-identity": suite_line_identity,
    "rect-closed-forms": suite_rect_closed_forms,
    "residue-energy": suite_residue_energy,
    "top-cap": suite_top_cap,
    "localization": suite_localization,
    "square-window": suite_square_window,
    "heavy-shifts": suite_heavy_shifts,
    "gap-hull": suite_gap_hull,
    "diffset-covering": suite_diffset_covering,
    "palette": suite_palette,
    "cs-floor": suite_cs_floor,
    "directional-mass": suite_directional_mass,
    "doubling-popularity": suite_doubling_popularity,
}


def run_suite(name: str, trials=None, seed=0, nmax=None) -> SuiteResult:
    if name not in SUITES:
        raise PreconditionError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    fn = SUITES[name]
    kw = {}
    code = fn.__code__.co_varnames[:fn.__code__.co_argcount]
    if trials is not None and "trials" in code:
        kw["trials"] = trials
    if "seed" in code:
        kw["seed"] = seed
    if nmax is not None and "nmax" in code:
        kw["nmax"] = nmax
    return fn(**kw)

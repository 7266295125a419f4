"""Structure classifier for point sets with few distinct distances.

Three outcomes carry certificates that can be re-checked from the raw points
with the spectrum module alone:

* LineHeavy: one line holds at least c_line * n points.
* TwoShift: two nonparallel shifts that each move a constant fraction of a
  dense lattice-rectangle piece A onto itself, plus the residue-class energy
  bound on that piece.
* Localized: a closed ball centred at a point of X, of radius equal to a
  distance quantile, that captures at least (1 - eta) n points.

The two-shift branch is a constructive stand-in for the existential
Balog-Szemeredi-Gowers/Freiman step: it builds the sublattice from the two most
popular nonparallel shifts and extracts a square window from the densest
coset. It can fail on adversarial inputs, hence the Indeterminate outcome.
"""

from dataclasses import asdict, dataclass, field
from fractions import Fraction
from math import log

import numpy as np

from .errors import PreconditionError, TheoremViolation
from .exact import frac_str, primitive, to_fraction
from .pointset import LatticePointSet
from .spectrum import (additive_energy, distance_spectrum, energy_of_points, keys_of, line_histogram,
                       lines_parallel_to, points_on_line, residue_decompose, shift_histogram)
from .windows import extract_square_window, find_heavy_shifts

SCHEMA_VERSION = 1

LINE_HEAVY = "LineHeavy"
TWO_SHIFT = "TwoShift"
LOCALIZED = "Localized"
INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class ClassifierConfig:
    sigma: Fraction = Fraction(1, 4)
    c_line: Fraction = Fraction(1, 10)
    c_shift: Fraction = Fraction(1, 10)
    alpha_energy: Fraction = Fraction(1, 10)
    eta_target: Fraction | None = None      # None: theta_k ** (1/2)

    def __post_init__(self):
        for name in ("sigma", "c_line", "c_shift", "alpha_energy", "eta_target"):
            v = getattr(self, name)
            if v is None:
                continue
            v = to_fraction(v)
            object.__setattr__(self, name, v)
            if not 0 < v <= 1:
                raise PreconditionError(f"{name} must lie in (0, 1]")
        if self.sigma > Fraction(1, 4):
            raise PreconditionError("sigma must lie in (0, 1/4]")

    def theta(self, k: int) -> float:
        """theta_k = (log k)^(-1/2 - sigma); only meaningful when it is below 1."""
        return log(k) ** (-0.5 - float(self.sigma)) if k >= 3 else 1.0

    def eta(self, k: int) -> Fraction:
        if self.eta_target is not None:
            return self.eta_target
        return to_fraction(self.theta(k) ** 0.5).limit_denominator(10**9)

    def to_json(self) -> dict:
        return {k: (frac_str(v) if v is not None else None) for k, v in asdict(self).items()}

    @classmethod
    def from_json(cls, d: dict) -> "ClassifierConfig":
        known = {k: d[k] for k in ("sigma", "c_line", "c_shift", "alpha_energy", "eta_target") if k in d}
        return cls(**{k: (to_fraction(v) if v is not None else None) for k, v in known.items()})


def _pts(X) -> np.ndarray:
    return X.points if isinstance(X, LatticePointSet) else np.asarray(X, dtype=np.int64).reshape(-1, 2)


@dataclass(frozen=True)
class TopCap:
    L: int
    top_mass: int
    bottom_mass: int
    q_ord: int

    @property
    def bound(self) -> float:
        return (self.q_ord * self.L) ** 0.5

    @property
    def ok(self) -> bool:
        return self.top_mass * self.top_mass <= self.q_ord * self.L


def top_cap_split(spec, theta) -> TopCap:
    """Mass of the L = floor(theta k) largest keys against sqrt(Q_ord L)."""
    theta = to_fraction(theta)
    if theta < 0:
        raise PreconditionError("theta must be nonnegative")
    L = int(theta * spec.k // 1)
    top = int(spec.mult[spec.k - L:].sum()) if L > 0 else 0
    total = spec.n * (spec.n - 1)
    cap = TopCap(L, top, total - top, spec.q_ord())
    if not cap.ok:
        raise TheoremViolation("top-cap mass exceeds sqrt(Q_ord L)")
    return cap


@dataclass(frozen=True)
class Localization:
    ok: bool
    z_index: int | None
    z: tuple | None
    count: int
    t_key: int
    deficit: int          # required bottom mass minus actual, > 0 when failing


def ball_counts(X, t_key: int) -> np.ndarray:
    """|X & B(x, sqrt(s t_key))| for every x in X (closed balls)."""
    pts = _pts(X)
    model = X.model
    n = len(pts)
    out = np.zeros(n, dtype=np.int64)
    step = max(1, 4_000_000 // n)
    for i0 in range(0, n, step):
        d = pts[None, :, :] - pts[i0:i0 + step, None, :]
        out[i0:i0 + step] = (keys_of(model, d.reshape(-1, 2)).reshape(d.shape[:2]) <= t_key).sum(axis=1)
    return out


def localize(X: LatticePointSet, t_key: int, eta, spec=None) -> Localization:
    """Best centre z in X for the closed ball at key t_key, when the pair mass allows it."""
    eta = to_fraction(eta)
    n = X.n
    spec = spec or distance_spectrum(X)
    need = (1 - eta) * n * (n - 1)
    have = spec.mass_upto(t_key)
    if have < need:
        deficit = int(-((have - need) // 1))
        return Localization(False, None, None, 0, int(t_key), max(deficit, 1))
    counts = ball_counts(X, t_key)
    i = int(np.argmax(counts))           # first maximum in input order
    count = int(counts[i])
    if count < (1 - eta) * n:
        raise TheoremViolation("localization guarantee failed although the mass condition holds")
    return Localization(True, i, tuple(int(x) for x in X.points[i]), count, int(t_key), 0)


@dataclass(frozen=True)
class PopularShifts:
    threshold: Fraction
    vectors: np.ndarray = field(repr=False)
    counts: np.ndarray = field(repr=False)
    pair: tuple | None          # ((v1, r1), (v2, r2)) nonparallel, maximizing min(r)
    direction: tuple | None     # common primitive direction when all are parallel
    directional_mass: int | None

    @property
    def size(self) -> int:
        return len(self.vectors)


def directional_mass(hist, u) -> int:
    """sum of r(v) over nonzero v parallel to u."""
    d1, d2 = primitive(int(u[0]), int(u[1]))
    v = hist.vectors
    par = v[:, 0] * d2 - v[:, 1] * d1 == 0
    return int(hist.counts[par].sum())


def line_pair_mass(X, u) -> int:
    """sum over lines L parallel to u of s_L (s_L - 1)."""
    return sum(s * (s - 1) for s in lines_parallel_to(X, primitive(int(u[0]), int(u[1]))).values())


def popular_shift_analysis(X, rho, hist=None) -> PopularShifts:
    rho = to_fraction(rho)
    if not 0 < rho < 1:
        raise PreconditionError("rho must lie in (0, 1)")
    pts = _pts(X)
    n = len(pts)
    hist = hist or shift_histogram(pts)
    mask = hist.counts * rho.denominator >= rho.numerator * n
    vec, cnt = hist.vectors[mask], hist.counts[mask]
    if len(vec) == 0:
        return PopularShifts(rho, vec, cnt, None, None, None)
    # sort by r descending, canonical sign first, then lexicographically;
    # taking the first vector and the first one not parallel to it maximizes min(r)
    canon = (vec[:, 0] > 0) | ((vec[:, 0] == 0) & (vec[:, 1] > 0))
    order = np.lexsort((vec[:, 1], vec[:, 0], ~canon, -cnt))
    vec, cnt = vec[order], cnt[order]
    a = vec[0]
    cross = vec[:, 0] * a[1] - vec[:, 1] * a[0]
    nonpar = np.flatnonzero(cross != 0)
    if len(nonpar):
        j = int(nonpar[0])
        pair = ((tuple(int(x) for x in a), int(cnt[0])), (tuple(int(x) for x in vec[j]), int(cnt[j])))
        return PopularShifts(rho, vec, cnt, pair, None, None)
    u = primitive(int(a[0]), int(a[1]))
    return PopularShifts(rho, vec, cnt, None, u, directional_mass(hist, u))


@dataclass(frozen=True)
class ResidueReport:
    N: int
    sizes: dict
    energy: int
    alpha: Fraction

    @property
    def max_size(self) -> int:
        return max(self.sizes.values()) if self.sizes else 0

    @property
    def bound(self) -> int:
        return 4 * self.N * self.N * self.max_size

    @property
    def ok(self) -> bool:
        return self.energy <= self.bound

    @property
    def energy_large(self) -> bool:
        return self.energy >= self.alpha * self.N ** 3

    @property
    def heavy_class_ok(self) -> bool:
        return (not self.energy_large) or self.max_size >= self.alpha * self.N / 4


def energy_residue_check(pts, alpha=Fraction(1, 10)) -> ResidueReport:
    """E+ (diagonal included) against 4 N^2 max m_j for classes mod 2 of the given coordinates."""
    pts = np.asarray(pts, dtype=np.int64).reshape(-1, 2)
    alpha = to_fraction(alpha)
    dec = residue_decompose(pts)
    rep = ResidueReport(len(pts), dec.sizes, energy_of_points(pts), alpha)
    if not rep.ok:
        raise TheoremViolation("E+ exceeds 4 N^2 max m_j")
    if not rep.heavy_class_ok:
        raise TheoremViolation("large energy without a heavy residue class")
    return rep


@dataclass(frozen=True)
class TwoShiftCertificate:
    basis: tuple                # (w1, w2): integer vectors spanning the sublattice
    anchor: tuple               # base point of the coset, original coordinates
    rect_a0: tuple              # square window anchor in (w1, w2) coordinates
    side: int
    A: np.ndarray = field(repr=False)   # X & W in original coordinates
    v1: tuple = ()
    v2: tuple = ()
    overlap1: int = 0
    overlap2: int = 0
    density: Fraction = Fraction(0)
    beta: Fraction = Fraction(0)
    residue_sizes: dict = field(default_factory=dict)
    energy: int = 0
    set_aside: int = 0

    @property
    def N(self) -> int:
        return len(self.A)

    def to_json(self) -> dict:
        return {
            "kind": "constructive surrogate",
            "basis": [list(w) for w in self.basis],
            "anchor": list(self.anchor),
            "rect_a0": list(self.rect_a0),
            "side": self.side,
            "A": self.A.tolist(),
            "N": self.N,
            "v1": list(self.v1),
            "v2": list(self.v2),
            "overlap1": self.overlap1,
            "overlap2": self.overlap2,
            "density": frac_str(self.density),
            "beta": frac_str(self.beta),
            "residue_sizes": {f"{a},{b}": m for (a, b), m in sorted(self.residue_sizes.items())},
            "energy": self.energy,
            "set_aside": self.set_aside,
        }


@dataclass(frozen=True)
class PipelineFail:
    reason: str
    detail: dict = field(default_factory=dict)


def _coset_coords(pts: np.ndarray, w1, w2):
    """Coset labels of Z w1 + Z w2 and integer coordinates relative to each coset's first point."""
    det = w1[0] * w2[1] - w1[1] * w2[0]
    # adj(M) p with M = [w1 w2] (columns); p in the sublattice iff adj(M) p = 0 mod det
    ax = w2[1] * pts[:, 0] - w2[0] * pts[:, 1]
    ay = -w1[1] * pts[:, 0] + w1[0] * pts[:, 1]
    ad = abs(det)
    label = (ax % ad) * ad + (ay % ad)
    return det, ax, ay, label


def two_shift_pipeline(X, config: ClassifierConfig = ClassifierConfig(), popular=None):
    pts = _pts(X)
    popular = popular or popular_shift_analysis(pts, config.c_shift)
    if popular.pair is None:
        return PipelineFail("no-nonparallel-shifts", {"popular": popular.size})
    w1, w2 = popular.pair[0][0], popular.pair[1][0]
    det, ax, ay, label = _coset_coords(pts, w1, w2)
    labels, counts = np.unique(label, return_counts=True)
    best = labels[np.argmax(counts)]
    sel = np.flatnonzero(label == best)
    set_aside = len(pts) - len(sel)
    p0 = pts[sel[0]]
    a = (ax[sel] - ax[sel[0]]) // det
    b = (ay[sel] - ay[sel[0]]) // det
    coords = np.stack([a, b], axis=1)
    lo = coords.min(axis=0)
    L1, L2 = (int(x) for x in coords.max(axis=0) - lo + 1)
    local = coords - lo
    if L1 < L2:
        local = local[:, ::-1]
        L1, L2 = L2, L1
        w1, w2 = w2, w1
        lo = lo[::-1]
    if L2 < 2:
        return PipelineFail("degenerate-rectangle", {"L1": L1, "L2": L2})
    sq = extract_square_window(local, L1, L2)
    inW = (local[:, 0] >= sq.start) & (local[:, 0] < sq.start + L2)
    Aloc = local[inW] - np.array([sq.start, 0])
    if sq.density < config.c_shift:
        return PipelineFail("window-density-below-threshold",
                            {"density": frac_str(sq.density), "beta": frac_str(sq.beta)})
    hs = find_heavy_shifts(Aloc, L2, L2)
    size = len(Aloc)
    v1 = tuple(int(hs.eps1 * hs.s * x) for x in w1)
    v2 = tuple(int(hs.eps2 * hs.t * x) for x in w2)
    if hs.overlap1 < config.c_shift * size or hs.overlap2 < config.c_shift * size:
        return PipelineFail("overlap-below-threshold",
                            {"overlap1": hs.overlap1, "overlap2": hs.overlap2, "A": size})
    res = energy_residue_check(Aloc, config.alpha_energy)
    A_orig = pts[sel[inW]]
    a0 = (int(lo[0]) + sq.start, int(lo[1]))
    return TwoShiftCertificate((tuple(w1), tuple(w2)), tuple(int(x) for x in p0), a0, L2, A_orig,
                               v1, v2, hs.overlap1, hs.overlap2, sq.density, sq.beta, res.sizes,
                               res.energy, set_aside)


@dataclass
class ClassificationReport:
    outcome: str
    n: int
    k: int
    config: ClassifierConfig
    certificate: dict
    diagnostics: dict

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "outcome": self.outcome,
            "n": self.n,
            "k": self.k,
            "config": self.config.to_json(),
            "certificate": self.certificate,
            "diagnostics": self.diagnostics,
        }


def _line_heavy(X, config, diag):
    lh = line_histogram(X)
    key, s = lh.max_line()
    diag["max_line"] = s
    if key is not None and s >= config.c_line * X.n:
        return {"line": list(key), "s": s}
    return None


def classify(X: LatticePointSet, config: ClassifierConfig = ClassifierConfig()) -> ClassificationReport:
    """High energy: two-shift pipeline, falling back to the line test. Otherwise
    line test, then quantile localization, then Indeterminate."""
    n = X.n
    if n < 3:
        raise PreconditionError("classification needs at least three points")
    spec = distance_spectrum(X)
    k = spec.k
    en = additive_energy(X)
    E = en.energy_with_diagonal
    diag = {"energy_with_diagonal": E, "energy_ratio": E / n ** 3,
            "energy_threshold": frac_str(config.alpha_energy * n ** 3)}

    def report(outcome, cert):
        return ClassificationReport(outcome, n, k, config, cert, diag)

    if E >= config.alpha_energy * n ** 3:
        pop = popular_shift_analysis(X, config.c_shift, en.hist)
        diag["popular_shifts"] = pop.size
        if pop.direction is not None:
            diag["popular_direction"] = list(pop.direction)
            diag["directional_mass"] = pop.directional_mass
        res = two_shift_pipeline(X, config, pop)
        if isinstance(res, TwoShiftCertificate):
            return report(TWO_SHIFT, res.to_json())
        diag["two_shift_fail"] = {"reason": res.reason, **res.detail}
    line = _line_heavy(X, config, diag)
    if line is not None:
        return report(LINE_HEAVY, line)
    theta = config.theta(k)
    eta = config.eta(k)
    diag["theta"] = theta
    diag["eta"] = frac_str(eta)
    if theta < 1:
        th = to_fraction(theta).limit_denominator(10**9)
        cap = top_cap_split(spec, th)
        diag["top_cap"] = {"L": cap.L, "top": cap.top_mass, "bound": cap.bound}
        if spec.quantile_index(th) >= 1:
            t_key = spec.quantile_key(th)
            loc = localize(X, t_key, eta, spec)
            if loc.ok:
                return report(LOCALIZED, {"z_index": loc.z_index, "z": list(loc.z), "t_key": t_key,
                                          "theta": frac_str(th), "eta": frac_str(eta), "count": loc.count})
            diag["localize_deficit"] = loc.deficit
    return report(INDETERMINATE, {})


def verify_report(X: LatticePointSet, rep) -> bool:
    """Re-derive every claimed count in a report from the raw points."""
    d = rep.to_json() if isinstance(rep, ClassificationReport) else rep
    cfg = ClassifierConfig.from_json(d["config"])
    n = X.n
    spec = distance_spectrum(X)
    if d["n"] != n or d["k"] != spec.k:
        return False
    c = d["certificate"]
    out = d["outcome"]
    if out == LINE_HEAVY:
        s = points_on_line(X, tuple(c["line"]))
        return s == c["s"] and s >= cfg.c_line * n
    if out == LOCALIZED:
        th, eta = to_fraction(c["theta"]), to_fraction(c["eta"])
        if spec.quantile_key(th) != c["t_key"]:
            return False
        z = np.array(c["z"], dtype=np.int64)
        if tuple(z) not in X:
            return False
        cnt = int(np.count_nonzero(keys_of(X.model, X.points - z) <= c["t_key"]))
        return cnt == c["count"] and cnt >= (1 - eta) * n
    if out == TWO_SHIFT:
        w1, w2 = (tuple(w) for w in c["basis"])
        if w1[0] * w2[1] - w1[1] * w2[0] == 0:
            return False
        v1, v2 = tuple(c["v1"]), tuple(c["v2"])
        if v1[0] * v2[1] - v1[1] * v2[0] == 0:
            return False
        # recompute X & W from the anchor, basis and rectangle
        p = X.points - np.array(c["anchor"])
        det, ax, ay, _ = _coset_coords(p, w1, w2)
        inL = (ax % abs(det) == 0) & (ay % abs(det) == 0)
        a, b = ax // det, ay // det
        a0, side = c["rect_a0"], c["side"]
        inW = inL & (a >= a0[0]) & (a < a0[0] + side) & (b >= a0[1]) & (b < a0[1] + side)
        A = X.points[inW]
        if sorted(map(tuple, A.tolist())) != sorted(map(tuple, c["A"])):
            return False
        if len(A) == 0:
            return False
        h = shift_histogram(A)
        if h.r(v1) != c["overlap1"] or h.r(v2) != c["overlap2"]:
            return False
        if min(c["overlap1"], c["overlap2"]) < cfg.c_shift * len(A):
            return False
        local = np.stack([a[inW] - a0[0], b[inW] - a0[1]], axis=1)
        dec = residue_decompose(local)
        sizes = {f"{x},{y}": m for (x, y), m in sorted(dec.sizes.items())}
        if sizes != c["residue_sizes"]:
            return False
        E = additive_energy(A).energy_with_diagonal
        N = len(A)
        return E == c["energy"] and E <= 4 * N * N * dec.max_size
    if out == INDETERMINATE:
        return True
    return False


@dataclass(frozen=True)
class DoublingPopularity:
    size: int
    difference_set: int
    K: Fraction
    popular: int        # v with r(v) >= |A| / (2K), v = 0 included


def doubling_popularity(A) -> DoublingPopularity:
    """Measured doubling K = |A - A| / |A| and the number of K-popular differences."""
    pts = np.asarray(A, dtype=np.int64).reshape(-1, 2)
    n = len(pts)
    if n == 0:
        raise PreconditionError("A is empty")
    h = shift_histogram(pts)
    diff = len(h.counts) + 1
    K = Fraction(diff, n)
    thr = Fraction(n) / (2 * K)
    popular = int(np.count_nonzero(h.counts >= thr)) + (1 if n >= thr else 0)
    return DoublingPopularity(n, diff, K, popular)

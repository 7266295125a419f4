"""Census of integers represented by a positive definite binary quadratic form.

A census marks every n in 1..T with n = F(x, y) for some (x, y) != (0, 0).
It is built stripe by stripe over the reduced form's ellipse, so memory is the
table itself (one byte per integer in memory, one bit per integer on disk).
"""

import struct
from dataclasses import dataclass, field
from fractions import Fraction
from math import isqrt, log, sqrt
from pathlib import Path

import numpy as np

from .errors import DDLabError, ParseError, PreconditionError, TheoremViolation
from .exact import check_budget, floor_sqrt_diff_sq
from .lattice import QuadForm, gauss_reduce

CACHE_MAGIC = b"DDRT"
CACHE_VERSION = 1
_HEADER = struct.Struct("<4sIqqqq")


@dataclass(frozen=True, eq=False)
class RepTable:
    form: QuadForm
    T: int
    represented: np.ndarray = field(repr=False)   # bool, index n for 0..T; index 0 unused
    _cum: np.ndarray = field(default=None, repr=False)

    @property
    def count(self) -> int:
        return self.upto(self.T)

    def cumulative(self) -> np.ndarray:
        if self._cum is None:
            object.__setattr__(self, "_cum", np.cumsum(self.represented, dtype=np.int64))
        return self._cum

    def upto(self, t) -> int:
        """R_F(t) for any t <= T; t < 1 gives 0."""
        t = int(t)
        if t < 1:
            return 0
        if t > self.T:
            raise PreconditionError(f"census only covers n <= {self.T}")
        return int(self.cumulative()[t])

    def upto_many(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=np.int64)
        if np.any(ts > self.T):
            raise PreconditionError(f"census only covers n <= {self.T}")
        return np.where(ts < 1, 0, self.cumulative()[np.clip(ts, 0, self.T)])

    def values(self) -> np.ndarray:
        return np.flatnonzero(self.represented)

    def is_represented(self, n: int) -> bool:
        return 1 <= n <= self.T and bool(self.represented[n])


def reduced_form(form: QuadForm) -> QuadForm:
    """A properly equivalent reduced form; it represents the same integers."""
    _, g = gauss_reduce(form.gram())
    return QuadForm(int(g.g11), int(2 * g.g12), int(g.g22))


def represented_upto(form: QuadForm, T: int, budget=None) -> RepTable:
    T = int(T)
    if T < 1:
        raise PreconditionError("T must be at least 1")
    check_budget(f"census up to T={T}", T + 1, budget)
    f = reduced_form(form)
    a, b, c = f.a, f.b, f.c
    disc = 4 * a * c - b * b
    bits = np.zeros(T + 1, dtype=bool)
    # F(x, y) = F(-x, -y): the half plane x > 0, plus x = 0, y > 0, is enough
    xmax = isqrt(4 * c * T // disc) + 1
    ymax0 = isqrt(T // c)
    bits[c * np.arange(1, ymax0 + 1, dtype=np.int64) ** 2] = True
    chunk = 1 << 22
    x = 1
    while x <= xmax:
        # stripes for several x at once, bounded by ~chunk values
        width = isqrt(4 * a * T // disc) + 2
        step = max(1, chunk // (2 * width + 1))
        xs = np.arange(x, min(xmax, x + step - 1) + 1, dtype=np.int64)
        x = int(xs[-1]) + 1
        # c y^2 + b x y + a x^2 - T <= 0
        rad = b * b * xs * xs - 4 * c * (a * xs * xs - T)
        ok = rad >= 0
        if not ok.any():
            continue
        xs, rad = xs[ok], rad[ok]
        r = np.sqrt(rad.astype(np.float64)).astype(np.int64) + 1
        lo = np.floor((-b * xs - r) / (2 * c)).astype(np.int64) - 1
        hi = np.ceil((-b * xs + r) / (2 * c)).astype(np.int64) + 1
        counts = hi - lo + 1
        rows = np.repeat(xs, counts)
        ys = np.repeat(lo, counts) + (np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts))
        vals = a * rows * rows + b * rows * ys + c * ys * ys
        vals = vals[vals <= T]
        bits[vals] = True
    bits[0] = False
    return RepTable(form, T, bits)


def write_cache(table: RepTable, path) -> None:
    f = table.form
    packed = np.packbits(table.represented, bitorder="little")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(CACHE_MAGIC, CACHE_VERSION, f.a, f.b, f.c, table.T))
        fh.write(packed.tobytes())


def read_cache(path, form: QuadForm | None = None, T_min: int = 0) -> RepTable:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ParseError(f"{path}: truncated census header")
    magic, version, a, b, c, T = _HEADER.unpack_from(data)
    if magic != CACHE_MAGIC or version != CACHE_VERSION:
        raise ParseError(f"{path}: not a census cache (version {CACHE_VERSION})")
    cached = QuadForm(a, b, c)
    if form is not None and (cached.a, cached.b, cached.c) != (form.a, form.b, form.c):
        raise ParseError(f"{path}: cache is for form {cached}, not {form}")
    if T < T_min:
        raise ParseError(f"{path}: cache covers T={T} < {T_min}")
    raw = np.frombuffer(data, dtype=np.uint8, offset=_HEADER.size)
    bits = np.unpackbits(raw, count=T + 1, bitorder="little").astype(bool)
    return RepTable(cached, T, bits)


def census(form: QuadForm, T: int, cache_dir=None, budget=None) -> RepTable:
    """Census up to T, reusing (and truncating) a cached table when one covers T."""
    if cache_dir is not None:
        path = Path(cache_dir) / f"census_{form.a}_{form.b}_{form.c}.bin"
        if path.exists():
            try:
                t = read_cache(path, form, T)
                return RepTable(form, T, t.represented[:T + 1].copy()) if t.T > T else t
            except ParseError:
                pass
        t = represented_upto(form, T, budget)
        path.parent.mkdir(parents=True, exist_ok=True)
        write_cache(t, path)
        return t
    return represented_upto(form, T, budget)


def log_grid(T_max: int, T_min: int = 100, per_decade: int = 8) -> list[int]:
    if T_max < T_min:
        return [int(T_max)]
    n = int(round(log(T_max / T_min, 10) * per_decade))
    grid = sorted({int(round(T_min * (T_max / T_min) ** (i / max(n, 1)))) for i in range(n + 1)})
    return grid


@dataclass(frozen=True)
class BernaysEstimate:
    form: QuadForm
    grid: tuple
    counts: tuple
    estimates: tuple
    extrapolated: float | None
    slope: float | None
    method: str
    residuals: tuple
    low_confidence: bool

    @property
    def headline(self) -> float:
        return self.extrapolated if self.extrapolated is not None else self.estimates[-1]

    def to_json(self) -> dict:
        return {
            "form": [self.form.a, self.form.b, self.form.c],
            "grid": list(self.grid),
            "counts": list(self.counts),
            "estimates": list(self.estimates),
            "extrapolated": self.extrapolated,
            "second_order": self.slope,
            "method": self.method,
            "residuals": list(self.residuals),
            "low_confidence": self.low_confidence,
            "headline": self.headline,
        }


LOW_CONFIDENCE_T = 10**4


def c_hat(count: int, T: int) -> float:
    return count * sqrt(log(T)) / T


def bernays_estimate(form: QuadForm, grid, table: RepTable | None = None, fit_decades: float = 2.0,
                     budget=None) -> BernaysEstimate:
    """C_hat(T) = R_F(T) sqrt(log T) / T on the grid, plus a two-parameter fit.

    The fit model R_F(T) = C T / sqrt(log T) (1 + b / log T) is linear in
    1 / log T once divided through, so least squares over the grid points in
    the top ``fit_decades`` decades gives C and C b.
    """
    grid = [int(t) for t in grid]
    if any(t < 2 for t in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
        raise PreconditionError("grid must be strictly increasing integers >= 2")
    table = table if table is not None and table.T >= grid[-1] else represented_upto(form, grid[-1], budget)
    counts = [table.upto(t) for t in grid]
    est = [c_hat(n, t) for n, t in zip(counts, grid)]
    top = [i for i, t in enumerate(grid) if t >= grid[-1] / 10 ** fit_decades]
    if len(top) >= 3:
        x = np.array([1 / log(grid[i]) for i in top])
        y = np.array([est[i] for i in top])
        slope, C = np.polyfit(x, y, 1)
        resid = tuple(float(r) for r in y - (C + slope * x))
        C, slope, method = float(C), float(slope / C), "lstsq C(1 + b/log T)"
    else:
        C, slope, resid, method = None, None, (), "none (fewer than 3 fit points)"
    return BernaysEstimate(form, tuple(grid), tuple(counts), tuple(est), C, slope, method, resid,
                           grid[-1] < LOW_CONFIDENCE_T)


@dataclass(frozen=True)
class PaletteReport:
    k: int
    lower_arg: int
    upper_arg: int
    lower: int
    upper: int

    @property
    def ok(self) -> bool:
        return self.lower <= self.k <= self.upper

    @property
    def slack(self) -> tuple[int, int]:
        return self.k - self.lower, self.upper - self.k


def palette_args(model, R_sq, c=0) -> tuple[int, int]:
    """floor((2(1-c)R - 2 mu)^2 / s) and floor((2R)^2 / s), exactly."""
    c, R_sq = Fraction(c), Fraction(R_sq)
    s = model.scale_s
    lower = floor_sqrt_diff_sq(4 * (1 - c) ** 2 * R_sq, 4 * model.covering_radius_sq, s)
    upper = int((4 * R_sq / s) // 1)
    return lower, upper


def palette_bounds_check(window, cert, table: RepTable | None = None, spectrum=None, budget=None) -> PaletteReport:
    """Exact k = |D(W)| against R_F of both palette arguments."""
    from .spectrum import distance_spectrum
    model = window.model
    if (1 - cert.c) ** 2 * cert.R_sq <= model.covering_radius_sq:
        raise PreconditionError("(1-c)R must exceed the covering radius")
    lo_arg, hi_arg = palette_args(model, cert.R_sq, cert.c)
    if table is None or table.T < hi_arg:
        table = represented_upto(model.form, max(hi_arg, 1), budget)
    spec = spectrum or distance_spectrum(window.points, budget=budget)
    rep = PaletteReport(spec.k, lo_arg, hi_arg, table.upto(lo_arg), table.upto(hi_arg))
    if not rep.ok:
        raise TheoremViolation(f"palette sandwich failed: {rep.lower} <= {rep.k} <= {rep.upper}")
    return rep


@dataclass(frozen=True)
class Inversion:
    T: float
    correction: float
    iterations: int


def invert_k_to_T(k, C_est, rtol: float = 1e-12, max_iter: int = 10_000) -> Inversion:
    """Solve k = C T / sqrt(log T) by T <- (k / C) sqrt(log T) from T0 = k."""
    if not k >= 3:
        raise PreconditionError("k must be at least 3")
    if not C_est > 0:
        raise PreconditionError("C_est must be positive")
    k, C = float(k), float(C_est)
    T = max(k, 3.0)
    for i in range(1, max_iter + 1):
        T_new = (k / C) * sqrt(log(T))
        if T_new <= 1.0:
            raise DDLabError("inversion left the domain T > 1")
        if abs(T_new - T) <= rtol * T_new:
            return Inversion(T_new, sqrt(log(T_new)) / sqrt(log(k)), i)
        T = T_new
    raise DDLabError("fixed-point inversion did not converge")


def forward_k(T, C_est) -> float:
    return C_est * T / sqrt(log(T))

"""Exact distance spectra, shift histograms, energies and line statistics.

Distances are never represented as floats: a difference vector v gets the key
F(v), the primitive integral form of the lattice, and |v|^2 = s * F(v). Two
differences have the same length iff they have the same key.

Counts are over ordered pairs throughout.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from math import isqrt

import numpy as np
import scipy.fft

from .errors import PreconditionError
from .exact import check_budget, frac_str, to_fraction
from .pointset import LatticePointSet

FFT_WORKERS = 1


def set_workers(n: int) -> None:
    global FFT_WORKERS
    FFT_WORKERS = max(1, int(n))


@dataclass(frozen=True)
class ShiftHistogram:
    """r_X(v) for every nonzero v with r_X(v) > 0, rows sorted lexicographically."""

    vectors: np.ndarray
    counts: np.ndarray
    n: int

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def as_dict(self) -> dict:
        return {(int(a), int(b)): int(c) for (a, b), c in zip(self.vectors, self.counts)}

    def r(self, v) -> int:
        v = (int(v[0]), int(v[1]))
        if v == (0, 0):
            return self.n
        lo = np.searchsorted(self.vectors[:, 0], v[0], side="left")
        hi = np.searchsorted(self.vectors[:, 0], v[0], side="right")
        j = lo + np.searchsorted(self.vectors[lo:hi, 1], v[1])
        if j < hi and self.vectors[j, 1] == v[1]:
            return int(self.counts[j])
        return 0

    def r_many(self, vs: np.ndarray) -> np.ndarray:
        vs = np.asarray(vs, dtype=np.int64).reshape(-1, 2)
        out = np.zeros(len(vs), dtype=np.int64)
        if len(self.vectors) == 0:
            return out
        lo = int(min(self.vectors[:, 1].min(), vs[:, 1].min()))
        span = int(max(self.vectors[:, 1].max(), vs[:, 1].max())) - lo + 1
        code = self.vectors[:, 0] * span + (self.vectors[:, 1] - lo)
        q = vs[:, 0] * span + (vs[:, 1] - lo)
        j = np.searchsorted(code, q)
        j = np.minimum(j, len(code) - 1)
        hit = code[j] == q
        out[hit] = self.counts[j[hit]]
        out[(vs[:, 0] == 0) & (vs[:, 1] == 0)] = self.n
        return out


def _direct_histogram(pts: np.ndarray):
    n = len(pts)
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    wy = int(hi[1] - lo[1])
    span = 2 * wy + 1
    code_pts = pts[:, 0] * span + pts[:, 1]
    chunk = max(1, 4_000_000 // n)
    parts = []
    for i in range(0, n, chunk):
        d = (code_pts[None, :] - code_pts[i:i + chunk, None]).ravel()
        parts.append(d)
    codes, counts = np.unique(np.concatenate(parts), return_counts=True)
    # decode: code = dx * span + dy with |dy| <= wy
    dx = np.floor_divide(codes + wy, span)
    dy = codes - dx * span
    vec = np.stack([dx, dy], axis=1)
    keep = (dx != 0) | (dy != 0)
    return vec[keep], counts[keep].astype(np.int64)


def _fft_histogram(pts: np.ndarray, budget=None):
    lo = pts.min(axis=0)
    local = pts - lo
    w, h = (int(x) + 1 for x in local.max(axis=0))
    P = scipy.fft.next_fast_len(2 * w - 1, real=True)
    Qn = scipy.fft.next_fast_len(2 * h - 1, real=True)
    check_budget("FFT autocorrelation grid", P * Qn * 8 * 4, budget)
    grid = np.zeros((P, Qn), dtype=np.float64)
    grid[local[:, 0], local[:, 1]] = 1.0
    spec = scipy.fft.rfft2(grid, workers=FFT_WORKERS)
    del grid
    spec = (spec * spec.conj()).real
    corr = scipy.fft.irfft2(spec, s=(P, Qn), workers=FFT_WORKERS)
    del spec
    # corr[v mod (P, Qn)] = #{x : x in X and x + v in X}
    xs = np.r_[np.arange(0, w), np.arange(P - w + 1, P)]
    ys = np.r_[np.arange(0, h), np.arange(Qn - h + 1, Qn)]
    block = corr[np.ix_(xs, ys)]
    del corr
    counts = np.rint(block)
    err = float(np.abs(block - counts).max()) if block.size else 0.0
    if err > 0.25:
        raise ArithmeticError(f"FFT rounding error {err} too large for exact counts")
    counts = counts.astype(np.int64)
    dx = np.r_[np.arange(0, w), np.arange(-w + 1, 0)]
    dy = np.r_[np.arange(0, h), np.arange(-h + 1, 0)]
    ix, iy = np.nonzero(counts)
    vec = np.stack([dx[ix], dy[iy]], axis=1)
    cnt = counts[ix, iy]
    keep = (vec[:, 0] != 0) | (vec[:, 1] != 0)
    vec, cnt = vec[keep], cnt[keep]
    order = np.lexsort((vec[:, 1], vec[:, 0]))
    return vec[order], cnt[order]


def _pick_method(pts: np.ndarray) -> str:
    n = len(pts)
    ext = pts.max(axis=0) - pts.min(axis=0) + 1
    grid = 4.0 * float(ext[0]) * float(ext[1])
    if n <= 64:
        return "direct"
    if grid * np.log2(grid + 2) * 2 < float(n) * n:
        return "fft"
    return "direct" if n <= 6000 else "fft"


def shift_histogram(X, method: str = "auto", budget=None) -> ShiftHistogram:
    pts = X.points if isinstance(X, LatticePointSet) else np.asarray(X, dtype=np.int64).reshape(-1, 2)
    n = len(pts)
    if n < 2:
        return ShiftHistogram(np.zeros((0, 2), dtype=np.int64), np.zeros(0, dtype=np.int64), n)
    if np.abs(pts).max() > 2**28:
        raise PreconditionError("coordinates too large for exact 64-bit keys")
    if method == "auto":
        method = _pick_method(pts)
    if method == "direct":
        check_budget("pairwise differences", min(n, max(1, 4_000_000 // n)) * n * 24 + n * n * 8, budget)
        vec, cnt = _direct_histogram(pts)
    elif method == "fft":
        vec, cnt = _fft_histogram(pts, budget)
    else:
        raise ValueError(f"unknown method {method!r}")
    return ShiftHistogram(vec, cnt, n)


@dataclass(frozen=True)
class DistanceSpectrum:
    """Sorted distance keys with ordered multiplicities m_t."""

    keys: np.ndarray
    mult: np.ndarray
    n: int
    scale_s: Fraction = Fraction(1)

    def __post_init__(self):
        keys, mult = self.keys, self.mult
        if len(keys) and (np.any(np.diff(keys) <= 0) or keys[0] <= 0):
            raise ValueError("keys must be positive and strictly increasing")
        if np.any(mult < 2) or np.any(mult % 2):
            raise ValueError("ordered multiplicities must be even and >= 2")
        if int(mult.sum()) != self.n * (self.n - 1):
            raise ValueError("multiplicities do not sum to n(n-1)")

    @property
    def k(self) -> int:
        return len(self.keys)

    def q_ord(self) -> int:
        return sum(int(m) * int(m) for m in self.mult)

    def cs_floor(self) -> Fraction:
        """The Cauchy-Schwarz lower bound n^2 (n-1)^2 / k for q_ord."""
        return Fraction(self.n * self.n * (self.n - 1) ** 2, self.k)

    def quantile_index(self, theta) -> int:
        theta = to_fraction(theta)
        if not 0 < theta < 1:
            raise PreconditionError("theta must lie in (0, 1)")
        return int((1 - theta) * self.k // 1)

    def quantile_key(self, theta) -> int:
        """The floor((1 - theta) k)-th smallest key (1-based)."""
        idx = self.quantile_index(theta)
        if idx < 1:
            raise PreconditionError(f"quantile index floor((1-theta)k) = {idx} < 1")
        return int(self.keys[idx - 1])

    def mass_upto(self, key) -> int:
        j = np.searchsorted(self.keys, key, side="right")
        return int(self.mult[:j].sum())

    def distance_sq(self, key) -> Fraction:
        return self.scale_s * int(key)

    def key_set(self) -> set:
        return set(int(t) for t in self.keys)

    def rows(self):
        for t, m in zip(self.keys, self.mult):
            d = self.distance_sq(t)
            yield int(t), int(m), d.numerator, d.denominator

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "scale_s": frac_str(self.scale_s),
            "q_ord": self.q_ord(),
            "cs_floor": frac_str(self.cs_floor()) if self.k else None,
            "keys": [int(t) for t in self.keys],
            "mult": [int(m) for m in self.mult],
        }


def keys_of(model, vectors: np.ndarray) -> np.ndarray:
    F = model.form
    v1 = vectors[:, 0]
    v2 = vectors[:, 1]
    return F.a * v1 * v1 + F.b * v1 * v2 + F.c * v2 * v2


def spectrum_from_histogram(model, hist: ShiftHistogram) -> DistanceSpectrum:
    keys = keys_of(model, hist.vectors)
    uniq, inv = np.unique(keys, return_inverse=True)
    mult = np.bincount(inv, weights=hist.counts.astype(np.float64), minlength=len(uniq))
    mult = np.rint(mult).astype(np.int64)
    return DistanceSpectrum(uniq.astype(np.int64), mult, hist.n, model.scale_s)


def distance_spectrum(X: LatticePointSet, method: str = "auto", budget=None) -> DistanceSpectrum:
    if X.n < 2:
        raise PreconditionError("distance spectrum needs at least two points")
    return spectrum_from_histogram(X.model, shift_histogram(X, method, budget))


def q_ord(spec: DistanceSpectrum) -> tuple[int, Fraction]:
    """Q_ord together with its Cauchy-Schwarz floor."""
    return spec.q_ord(), spec.cs_floor()


def quantile_radius(spec: DistanceSpectrum, theta) -> int:
    return spec.quantile_key(theta)


@dataclass(frozen=True)
class EnergyReport:
    energy_offdiagonal: int
    energy_with_diagonal: int
    n: int
    hist: ShiftHistogram = field(repr=False)


def additive_energy(X, method: str = "auto", budget=None) -> EnergyReport:
    """E+ = sum_v r(v)^2; the v = 0 term n^2 is included only in ``energy_with_diagonal``."""
    hist = shift_histogram(X, method, budget)
    off = int(np.dot(hist.counts, hist.counts))
    return EnergyReport(off, off + hist.n * hist.n, hist.n, hist)


def energy_of_points(pts) -> int:
    """E+ including the diagonal for a raw integer point array."""
    pts = np.asarray(pts, dtype=np.int64).reshape(-1, 2)
    if len(pts) == 0:
        return 0
    return additive_energy(pts).energy_with_diagonal


@dataclass(frozen=True)
class LineHistogram:
    """Lines through at least two points, keyed by (d1, d2, c).

    (d1, d2) is the primitive direction with first nonzero entry positive and
    c = d1 * y - d2 * x is constant along the line.
    """

    lines: dict
    n: int

    def max_line(self):
        if not self.lines:
            return None, 0
        key = max(self.lines, key=lambda k: (self.lines[k], tuple(-x for x in k)))
        return key, self.lines[key]

    def pair_total(self) -> int:
        return sum(s * (s - 1) // 2 for s in self.lines.values())


def _pair_line_keys(pts: np.ndarray, i0: int, i1: int):
    a = pts[i0:i1, None, :]
    b = pts[None, :, :]
    idx_i = np.arange(i0, i1)[:, None]
    idx_j = np.arange(len(pts))[None, :]
    upper = np.broadcast_to(idx_j > idx_i, (i1 - i0, len(pts)))
    d = (b - a)[upper]
    p = np.broadcast_to(a, (i1 - i0, len(pts), 2))[upper]
    g = np.gcd(d[:, 0], d[:, 1])
    d = d // g[:, None]
    flip = (d[:, 0] < 0) | ((d[:, 0] == 0) & (d[:, 1] < 0))
    d[flip] *= -1
    c = d[:, 0] * p[:, 1] - d[:, 1] * p[:, 0]
    return np.stack([d[:, 0], d[:, 1], c], axis=1)


def line_histogram(X) -> LineHistogram:
    pts = X.points if isinstance(X, LatticePointSet) else np.asarray(X, dtype=np.int64).reshape(-1, 2)
    n = len(pts)
    if n < 2:
        raise PreconditionError("line histogram needs at least two points")
    step = max(1, 2_000_000 // n)
    parts = [_pair_line_keys(pts, i, min(n, i + step)) for i in range(0, n, step)]
    keys, counts = np.unique(np.concatenate(parts), axis=0, return_counts=True)
    lines = {}
    for key, pc in zip(map(tuple, keys.tolist()), counts.tolist()):
        s = (1 + isqrt(1 + 8 * pc)) // 2
        if s * (s - 1) // 2 != pc:
            raise ArithmeticError("pair count on a line is not triangular")
        lines[key] = s
    return LineHistogram(lines, n)


def lines_parallel_to(X, direction) -> dict:
    """Point counts s_L on every line L parallel to ``direction`` (singletons included)."""
    pts = X.points if isinstance(X, LatticePointSet) else np.asarray(X, dtype=np.int64).reshape(-1, 2)
    d1, d2 = int(direction[0]), int(direction[1])
    c = d1 * pts[:, 1] - d2 * pts[:, 0]
    vals, counts = np.unique(c, return_counts=True)
    return dict(zip(vals.tolist(), counts.tolist()))


def points_on_line(X, key) -> int:
    pts = X.points if isinstance(X, LatticePointSet) else np.asarray(X, dtype=np.int64).reshape(-1, 2)
    d1, d2, c = key
    return int(np.count_nonzero(d1 * pts[:, 1] - d2 * pts[:, 0] == c))


@dataclass(frozen=True)
class ResidueDecomposition:
    """Classes of points by coordinates mod 2 (cosets of the doubled lattice)."""

    buckets: dict

    @property
    def sizes(self) -> dict:
        return {k: len(v) for k, v in self.buckets.items()}

    @property
    def N(self) -> int:
        return sum(self.sizes.values())

    @property
    def max_size(self) -> int:
        return max(self.sizes.values()) if self.buckets else 0


def residue_decompose(X) -> ResidueDecomposition:
    pts = X.points if isinstance(X, LatticePointSet) else np.asarray(X, dtype=np.int64).reshape(-1, 2)
    par = pts % 2
    code = par[:, 0] * 2 + par[:, 1]
    buckets = {}
    for c in range(4):
        idx = np.nonzero(code == c)[0]
        if len(idx):
            buckets[(c // 2, c % 2)] = idx
    return ResidueDecomposition(buckets)

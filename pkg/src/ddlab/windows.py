"""Lattice windows: disks, lattice rectangles, inner-regularity certificates,
difference-set covering, lens/convex point counts and the rectangle toolkit.

Balls and rectangles are closed. Every membership test is exact: squared
norms are scaled to integers and radii involving square roots go through
``sqrt_le_sqrt_diff``.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from math import acos, lcm, pi, sqrt

import numpy as np

from .errors import PreconditionError, TheoremViolation
from .exact import (ellipse_points, floor_sqrt_diff_sq, frac_str, sqrt_le_sqrt_diff,
                    to_fraction)
from .lattice import ZERO2, LatticeModel, RationalVec2
from .pointset import LatticePointSet
from .spectrum import energy_of_points, shift_histogram


def _scaled(model: LatticeModel, w: RationalVec2):
    """(D, e) with D * (u + w) = D u + e integral; D is even."""
    D = lcm(2, w.x.denominator, w.y.denominator)
    return D, (int(w.x * D), int(w.y * D))


def norm_bound(model: LatticeModel, R_sq, D: int) -> int:
    """Largest integer M with (s/2) M / D^2 <= R_sq."""
    return int((2 * to_fraction(R_sq) * D * D / model.scale_s) // 1)


def scaled_norms(model: LatticeModel, pts: np.ndarray, w: RationalVec2, D: int) -> np.ndarray:
    """Integers N with Q(u + w) = (s/2) N / D^2, for each row u."""
    A, B, C = model.form_g2
    X1 = D * pts[:, 0] + int(w.x * D)
    X2 = D * pts[:, 1] + int(w.y * D)
    return A * X1 * X1 + 2 * B * X1 * X2 + C * X2 * X2


def disk_points(model: LatticeModel, w: RationalVec2, R_sq, budget=None):
    """Integer u with Q(u + w) <= R_sq, with their scaled norms."""
    D, e = _scaled(model, w)
    A, B, C = model.form_g2
    pts, vals = ellipse_points(A, 2 * B, C, norm_bound(model, R_sq, D), D, e, budget=budget)
    return pts, vals, D


@dataclass(frozen=True, eq=False)
class DiskWindow:
    model: LatticeModel
    offset: RationalVec2
    center: RationalVec2
    R_sq: Fraction
    points: LatticePointSet = field(repr=False)

    @property
    def n(self) -> int:
        return self.points.n

    @property
    def R(self) -> float:
        return sqrt(self.R_sq)

    def to_json(self) -> dict:
        return {
            "lattice": self.model.label or self.model.gram.to_json(),
            "shape": "disk",
            "offset": self.offset.to_json(),
            "z": self.center.to_json(),
            "R_sq": frac_str(self.R_sq),
            "n": self.n,
        }


def build_disk_window(model: LatticeModel, tau=ZERO2, z=ZERO2, R_sq=1, budget=None) -> DiskWindow:
    """(tau + Lambda) intersected with the closed ball B(z, R); coordinates are lattice coordinates."""
    R_sq = to_fraction(R_sq)
    if R_sq <= 0:
        raise PreconditionError("R_sq must be positive")
    tau, z = RationalVec2.of(tau), RationalVec2.of(z)
    predicted = pi * float(R_sq) / model.covolume + 4 * sqrt(float(R_sq)) / model.lambda1 + 4
    from .exact import check_budget
    check_budget(f"disk window with ~{int(predicted)} points", int(predicted) * 64, budget)
    pts, _, _ = disk_points(model, tau - z, R_sq, budget)
    if len(pts) == 0:
        raise PreconditionError("window contains no lattice points")
    return DiskWindow(model, tau, z, R_sq, LatticePointSet(model, pts, tau))


@dataclass(frozen=True)
class LambdaRectangle:
    a0: tuple
    L1: int
    L2: int

    @property
    def proper(self) -> bool:
        return self.L1 >= 2 and self.L2 >= 2

    @property
    def size(self) -> int:
        return self.L1 * self.L2

    def points(self) -> np.ndarray:
        i, j = np.meshgrid(np.arange(self.L1), np.arange(self.L2), indexing="ij")
        return np.stack([i.ravel() + self.a0[0], j.ravel() + self.a0[1]], axis=1).astype(np.int64)

    def contains(self, pts) -> np.ndarray:
        pts = np.asarray(pts).reshape(-1, 2)
        d0 = pts[:, 0] - self.a0[0]
        d1 = pts[:, 1] - self.a0[1]
        return (d0 >= 0) & (d0 < self.L1) & (d1 >= 0) & (d1 < self.L2)


@dataclass(frozen=True)
class InnerRegularCert:
    c: Fraction
    R_sq: Fraction
    aspect_bound: float
    core_removed: int | None = None


def _reduced_coords(model: LatticeModel, pts: np.ndarray) -> np.ndarray:
    (p, q), (r, s) = model.change          # det = 1, inverse is [[s, -q], [-r, p]]
    return np.stack([s * pts[:, 0] - q * pts[:, 1], -r * pts[:, 0] + p * pts[:, 1]], axis=1)


def certify_inner_regular(model: LatticeModel, W: LatticePointSet, z, R_sq, c=0) -> InnerRegularCert:
    """Exhaustively check B(z,(1-c)R) & (tau+L)  <=  W  <=  B(z,R) and (1-c)R > mu."""
    c, R_sq, z = to_fraction(c), to_fraction(R_sq), RationalVec2.of(z)
    if not 0 <= c < 1:
        raise PreconditionError("c must lie in [0, 1)")
    inner_sq = (1 - c) ** 2 * R_sq
    if inner_sq <= model.covering_radius_sq:
        raise PreconditionError("(1-c)R must exceed the covering radius")
    w = W.offset - z
    D, _ = _scaled(model, w)
    norms = scaled_norms(model, W.points, w, D)
    if np.any(norms > norm_bound(model, R_sq, D)):
        raise TheoremViolation("window has points outside B(z, R)")
    inner, _, _ = disk_points(model, w, inner_sq)
    missing = [tuple(u) for u in inner.tolist() if tuple(u) not in W]
    if missing:
        raise TheoremViolation(f"{len(missing)} points of B(z,(1-c)R) missing from the window")
    red = _reduced_coords(model, W.points)
    sides = red.max(axis=0) - red.min(axis=0) + 1
    aspect = float(max(sides) / min(sides))
    return InnerRegularCert(c, R_sq, aspect)


def disk_cert(window: DiskWindow, c=0) -> InnerRegularCert:
    return certify_inner_regular(window.model, window.points, window.center, window.R_sq, c)


@dataclass(frozen=True)
class CoveringReport:
    R_sq: Fraction
    guaranteed_key: int
    n_guaranteed: int
    missing: list
    largest_covered_key: int
    outer_key: int

    @property
    def ok(self) -> bool:
        return not self.missing


def verify_diffset_covering(window: DiskWindow, hist=None) -> CoveringReport:
    """Every lattice vector with |v| <= 2R - 2 mu must be a difference of window points."""
    model = window.model
    if window.R_sq <= model.covering_radius_sq:
        raise PreconditionError("R must exceed the covering radius")
    F = model.form
    s = model.scale_s
    K = floor_sqrt_diff_sq(4 * window.R_sq, 4 * model.covering_radius_sq, s)
    hist = hist or shift_histogram(window.points)
    outer = int((4 * window.R_sq / s) // 1)
    cand, keys = ellipse_points(F.a, F.b, F.c, outer)
    nz = keys > 0
    cand, keys = cand[nz], keys[nz]
    realized = hist.r_many(cand) > 0
    guaranteed = keys <= K
    missing = [tuple(v) for v in cand[guaranteed & ~realized].tolist()]
    unrealized = keys[~realized]
    largest = int(unrealized.min()) - 1 if len(unrealized) else outer
    return CoveringReport(window.R_sq, K, int(guaranteed.sum()), missing, largest, outer)


@dataclass(frozen=True)
class CoreReport:
    core: np.ndarray
    removed: int
    ratio: float
    shift_stable: bool


def inner_core(window: DiskWindow, cert: InnerRegularCert) -> CoreReport:
    """W_in = B(z, (1-c)R - Delta) with Delta the longest of v1, v2, v1 + v2."""
    model = window.model
    g = model.gram
    delta_sq = max(g.g11, g.g22, g.g11 + 2 * g.g12 + g.g22)
    A = (1 - cert.c) ** 2 * cert.R_sq
    if A <= delta_sq:
        raise PreconditionError("(1-c)R <= Delta: the inner core is empty")
    w = window.offset - window.center
    D, _ = _scaled(model, w)
    N_max = floor_sqrt_diff_sq(A, delta_sq, model.scale_s / (2 * D * D))
    pts = window.points.points
    core = pts[scaled_norms(model, pts, w, D) <= N_max]
    stable = all(
        all(tuple(u) in window.points for u in (core + np.array(t)).tolist())
        for t in ((0, 0), (1, 0), (0, 1), (1, 1))
    )
    removed = window.n - len(core)
    return CoreReport(core, removed, removed / sqrt(window.n), stable)


@dataclass(frozen=True)
class LensCount:
    count: int
    area: float
    predicted: float
    perimeter_bound: float

    @property
    def residual(self) -> float:
        return self.count - self.predicted

    @property
    def normalized_residual(self) -> float:
        return abs(self.residual) / (1 + self.perimeter_bound)


def lens_area(rho: float, d: float) -> float:
    if d >= 2 * rho:
        return 0.0
    return 2 * rho * rho * acos(d / (2 * rho)) - (d / 2) * sqrt(4 * rho * rho - d * d)


def lens_count(model: LatticeModel, tau, z, rho_sq, u, C_lattice=None) -> LensCount:
    """Points of tau + Lambda in B(z, rho) & (B(z, rho) - u), against area / covolume."""
    rho_sq = to_fraction(rho_sq)
    tau, z = RationalVec2.of(tau), RationalVec2.of(z)
    u = RationalVec2.of(u)
    u_sq = model.q(u.x, u.y)
    rho = sqrt(rho_sq)
    if u_sq > 4 * rho_sq:
        return LensCount(0, 0.0, 0.0, 4 * pi * rho)
    w = tau - z
    pts, _, _ = disk_points(model, w, rho_sq)
    D2, _ = _scaled(model, w + u)
    count = int(np.count_nonzero(scaled_norms(model, pts, w + u, D2) <= norm_bound(model, rho_sq, D2)))
    area = lens_area(rho, sqrt(u_sq))
    res = LensCount(count, area, area / model.covolume, 4 * pi * rho)
    if C_lattice is not None and abs(res.residual) > C_lattice * (1 + res.perimeter_bound):
        raise TheoremViolation(f"lens residual {res.residual:.3f} exceeds C(1 + 4 pi rho)")
    return res


@dataclass(frozen=True)
class ConvexCount:
    count: int
    area_over_covolume: float
    perimeter: float

    @property
    def residual(self) -> float:
        return self.count - self.area_over_covolume

    @property
    def normalized_residual(self) -> float:
        return abs(self.residual) / (1 + self.perimeter)


def convex_count_error(model: LatticeModel, K: dict, tau=ZERO2) -> ConvexCount:
    """Count (tau + Lambda) & K for a closed convex K.

    ``K`` is ``{"disk": (z, R_sq)}`` or ``{"polygon": [vertices]}`` with
    vertices in lattice coordinates (convex, either orientation).
    """
    tau = RationalVec2.of(tau)
    if "disk" in K:
        z, R_sq = K["disk"]
        R_sq = to_fraction(R_sq)
        pts, _, _ = disk_points(model, tau - RationalVec2.of(z), R_sq)
        return ConvexCount(len(pts), pi * float(R_sq) / model.covolume, 2 * pi * sqrt(R_sq))
    verts = [RationalVec2.of(v) for v in K["polygon"]]
    m = len(verts)
    area2 = sum(verts[i].x * verts[(i + 1) % m].y - verts[(i + 1) % m].x * verts[i].y for i in range(m))
    if area2 < 0:
        verts = verts[::-1]
        area2 = -area2
    perim = 0.0
    for i in range(m):
        e = verts[(i + 1) % m] - verts[i]
        perim += sqrt(model.q(e.x, e.y))
    lo_x = min(v.x for v in verts) - tau.x
    hi_x = max(v.x for v in verts) - tau.x
    lo_y = min(v.y for v in verts) - tau.y
    hi_y = max(v.y for v in verts) - tau.y
    xs = np.arange(int(np.ceil(float(lo_x))) - 1, int(np.floor(float(hi_x))) + 2)
    ys = np.arange(int(np.ceil(float(lo_y))) - 1, int(np.floor(float(hi_y))) + 2)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    D = lcm(tau.x.denominator, tau.y.denominator, *[v.x.denominator for v in verts],
            *[v.y.denominator for v in verts])
    px = D * gx.ravel() + int(tau.x * D)
    py = D * gy.ravel() + int(tau.y * D)
    inside = np.ones(len(px), dtype=bool)
    if m == 1:
        inside &= (px == int(verts[0].x * D)) & (py == int(verts[0].y * D))
    for i in range(m if m > 1 else 0):
        a, b = verts[i], verts[(i + 1) % m]
        ax, ay, bx, by = (int(t * D) for t in (a.x, a.y, b.x, b.y))
        cr = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
        inside &= cr >= 0
        if m == 2:
            # a segment: also require the point to lie between the endpoints
            dot = (px - ax) * (bx - ax) + (py - ay) * (by - ay)
            inside &= (cr == 0) & (dot >= 0) & (dot <= (bx - ax) ** 2 + (by - ay) ** 2)
    return ConvexCount(int(inside.sum()), float(area2 / 2), perim)


def _side_energy(L: int) -> int:
    return (2 * L ** 3 + L) // 3


def rect_energy_exact(L1: int, L2: int) -> int:
    """E+ (diagonal included) of an L1 x L2 lattice rectangle."""
    if L1 < 1 or L2 < 1:
        raise PreconditionError("side lengths must be positive")
    return _side_energy(L1) * _side_energy(L2)


def rect_rep_count(L1: int, L2: int, u1: int, u2: int) -> int:
    return max(0, L1 - abs(u1)) * max(0, L2 - abs(u2))


def _grid(A, L1, L2) -> np.ndarray:
    A = np.asarray(A, dtype=np.int64).reshape(-1, 2)
    g = np.zeros((L1, L2), dtype=np.int64)
    if len(A):
        if A.min() < 0 or A[:, 0].max() >= L1 or A[:, 1].max() >= L2:
            raise PreconditionError("set is not inside the rectangle")
        g[A[:, 0], A[:, 1]] = 1
    return g


def _overlap(g: np.ndarray, s: int, axis: int) -> int:
    if axis == 0:
        return int((g[s:, :] * g[:-s, :]).sum())
    return int((g[:, s:] * g[:, :-s]).sum())


@dataclass(frozen=True)
class HeavyShifts:
    s: int
    eps1: int
    overlap1: int
    bound1: Fraction
    t: int
    eps2: int
    overlap2: int
    bound2: Fraction
    beta: Fraction

    @property
    def ok(self) -> bool:
        return self.overlap1 >= self.bound1 and self.overlap2 >= self.bound2


def heavy_shift_bound(beta: Fraction, L: int, size: int) -> Fraction:
    return max(Fraction(0), (beta * L - 1) / (2 * (L - 1))) * size


def find_heavy_shifts(A, L1: int, L2: int) -> HeavyShifts:
    """Best shifts along each side of a proper L1 x L2 rectangle, A in local coords."""
    if L1 < 2 or L2 < 2:
        raise PreconditionError("rectangle must be proper")
    g = _grid(A, L1, L2)
    size = int(g.sum())
    if size == 0:
        raise PreconditionError("A is empty")
    beta = Fraction(size, L1 * L2)

    def best(L, axis):
        top = None
        for s in range(1, L):
            ov = _overlap(g, s, axis)
            for eps in (-1, 1):   # |A & (A + v)| = |A & (A - v)|, ties keep the smallest (s, sign)
                if top is None or ov > top[2]:
                    top = (s, eps, ov)
        return top

    s, e1, o1 = best(L1, 0)
    t, e2, o2 = best(L2, 1)
    return HeavyShifts(s, e1, o1, heavy_shift_bound(beta, L1, size),
                       t, e2, o2, heavy_shift_bound(beta, L2, size), beta)


@dataclass(frozen=True)
class SquareWindow:
    start: int
    side: int
    count: int
    density: Fraction
    beta: Fraction
    wrapped: bool

    def rectangle(self, a0=(0, 0)) -> LambdaRectangle:
        return LambdaRectangle((a0[0] + self.start, a0[1]), self.side, self.side)


def extract_square_window(A, L1: int, L2: int) -> SquareWindow:
    """An L2 x L2 block of columns holding at least half the density of A in L1 x L2."""
    if not L1 >= L2 >= 2:
        raise PreconditionError("need L1 >= L2 >= 2")
    g = _grid(A, L1, L2)
    b = g.sum(axis=1)
    total = int(b.sum())
    beta = Fraction(total, L1 * L2)
    ext = np.concatenate([b, b])
    csum = np.concatenate([[0], np.cumsum(ext)])
    sums = csum[L2:L2 + L1] - csum[:L1]          # cyclic window sums for s = 0..L1-1
    s_star = int(np.argmax(sums))
    wrapped = s_star > L1 - L2
    if not wrapped:
        start = s_star
    else:
        j1 = int(b[s_star:].sum())                  # suffix part [s*, L1-1]
        j2 = int(b[:s_star + L2 - L1].sum())        # prefix part [0, s*+L2-1-L1]
        start = L1 - L2 if j1 >= j2 else 0
    count = int(b[start:start + L2].sum())
    density = Fraction(count, L2 * L2)
    if density < beta / 2:
        raise TheoremViolation("square window density below beta/2")
    return SquareWindow(start, L2, count, density, beta, wrapped)


@dataclass(frozen=True)
class GapHull:
    a0: tuple
    L1: int
    L2: int
    delta_alpha: int
    delta_gamma: int

    @property
    def size(self) -> int:
        return self.L1 * self.L2

    def rectangle(self) -> LambdaRectangle:
        return LambdaRectangle(self.a0, self.L1, self.L2)


def gap_hull(P: LambdaRectangle, T) -> GapHull:
    """Smallest enlargement of P containing every translate t + P, t in T."""
    T = np.asarray(T, dtype=np.int64).reshape(-1, 2)
    if len(T) == 0:
        raise PreconditionError("T must be nonempty")
    amin, gmin = (int(x) for x in T.min(axis=0))
    da, dg = (int(x) for x in T.max(axis=0) - T.min(axis=0))
    hull = GapHull((P.a0[0] + amin, P.a0[1] + gmin), P.L1 + da, P.L2 + dg, da, dg)
    if hull.size != P.size + da * P.L2 + dg * P.L1 + da * dg:
        raise TheoremViolation("hull size identity failed")
    return hull


@dataclass(frozen=True)
class PairsReport:
    rho_eps: float
    n_lambda: int
    kappa: float
    lens_ok: bool
    deletion_ok: bool
    diameter_ok: bool
    deleted: int


def verify_inner_regular_pairs(window: DiskWindow, cert: InnerRegularCert, eps, delta,
                               deletions: int = 5, rng=None) -> PairsReport:
    """r_W(l) against the lens of radius rho_eps for every |l| <= (2 - delta) rho_eps.

    Lens points y and y + l both lie in B(z, rho_eps), inside the inner ball, so
    r_W(l) >= (lens count) must hold exactly. Also checks the deletion bound
    r_X(l) >= r_W(l) - 2|W \\ X| and that no difference exceeds 2R.
    """
    model = window.model
    eps, delta = to_fraction(eps), to_fraction(delta)
    a = (1 - cert.c - eps)
    if a <= 0:
        raise PreconditionError("1 - c - eps must be positive")
    rho_A, rho_B = a * a * window.R_sq, model.covering_radius_sq
    if rho_A <= rho_B:
        raise PreconditionError("rho_eps = (1-c-eps)R - mu must be positive")
    F, s = model.form, model.scale_s
    K = floor_sqrt_diff_sq((2 - delta) ** 2 * rho_A, (2 - delta) ** 2 * rho_B, s)
    lam, keys = ellipse_points(F.a, F.b, F.c, K)
    lam = lam[keys > 0]
    hist = shift_histogram(window.points)
    rW = hist.r_many(lam)
    # lens counts for every lambda at once: autocorrelation of the rho_eps ball
    # rho_eps^2 = (sqrt(rho_A) - sqrt(rho_B))^2 is irrational in general
    w = window.offset - window.center
    D, _ = _scaled(model, w)
    N_eps = floor_sqrt_diff_sq(rho_A, rho_B, model.scale_s / (2 * D * D))
    pts = window.points.points
    ball = pts[scaled_norms(model, pts, w, D) <= N_eps]
    lens = shift_histogram(ball).r_many(lam) if len(ball) >= 2 else np.zeros(len(lam), dtype=np.int64)
    lens_ok = bool(np.all(rW >= lens))
    kappa = float(rW.min() / float(window.R_sq)) if len(lam) else float("nan")
    diameter_ok = bool(np.all(model.scale_s * np.array(
        [int(x) for x in (F.a * hist.vectors[:, 0] ** 2 + F.b * hist.vectors[:, 0] * hist.vectors[:, 1]
                          + F.c * hist.vectors[:, 1] ** 2)], dtype=object) <= 4 * window.R_sq))
    rng = rng or np.random.default_rng(0)
    d = min(deletions, window.n - 2)
    keep = np.ones(window.n, dtype=bool)
    keep[rng.choice(window.n, size=d, replace=False)] = False
    hX = shift_histogram(pts[keep])
    deletion_ok = bool(np.all(hX.r_many(hist.vectors) >= hist.counts - 2 * d))
    rho_eps = sqrt(rho_A) - sqrt(rho_B)
    return PairsReport(rho_eps, len(lam), kappa, lens_ok, deletion_ok, diameter_ok, d)


def window_energy(points) -> int:
    return energy_of_points(points)

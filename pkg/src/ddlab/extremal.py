"""Largest disk windows with at most k distinct distances.

The number of distinct distances of W_R = (tau + Lambda) & B(z, R) is
counted without forming W - W. Every lattice vector with |v| <= 2R - 2 mu is a
difference of window points, so all represented keys up to that radius are
present and their number is read off the census. Only the thin annulus
2R - 2 mu < |v| <= 2R needs a realizability test: v is a difference iff some
midpoint y in the coset (Z^2 + w + v/2) satisfies
|B(y, v)| + Q(y) <= R^2 - Q(v)/4, with w = tau - z.
"""

import csv
from dataclasses import dataclass
from fractions import Fraction
from math import log, pi, sqrt

import numpy as np

from .errors import DDLabError, PreconditionError, TheoremViolation
from .exact import ellipse_points, floor_sqrt_diff_sq, frac_str
from .lattice import ZERO2, LatticeModel, RationalVec2, s_star
from .represented import RepTable, invert_k_to_T, represented_upto
from .windows import _scaled, build_disk_window, disk_points


@dataclass(frozen=True)
class PaletteCount:
    k: int
    interior: int
    annulus: int
    K_in: int
    K_out: int


class DiskPalette:
    """k(M) for windows {u : scaled norm of u + w <= M} at a fixed offset w."""

    def __init__(self, model: LatticeModel, w=ZERO2, table: RepTable | None = None, batch: int = 1 << 22):
        self.model = model
        self.w = RationalVec2.of(w)
        self.D, self.e = _scaled(model, self.w)
        self.table = table
        self.batch = batch

    def R_sq(self, M: int) -> Fraction:
        return self.model.scale_s * M / (2 * self.D * self.D)

    def M_of(self, R_sq) -> int:
        return int((2 * Fraction(R_sq) * self.D * self.D / self.model.scale_s) // 1)

    def _census(self, T: int) -> RepTable:
        if self.table is None or self.table.T < T:
            self.table = represented_upto(self.model.form, max(T, 2 * (self.table.T if self.table else 0), 1))
        return self.table

    def count(self, M: int) -> PaletteCount:
        model, D = self.model, self.D
        M = int(M)
        if M < 0:
            return PaletteCount(0, 0, 0, 0, 0)
        R_sq = self.R_sq(M)
        s = model.scale_s
        F = model.form
        K_out = int((4 * R_sq / s) // 1)
        K_in = floor_sqrt_diff_sq(4 * R_sq, 4 * model.covering_radius_sq, s)
        interior = self._census(max(K_in, 1)).upto(K_in)
        vs, keys = ellipse_points(F.a, F.b, F.c, K_out, lower=K_in)
        half = (vs[:, 0] > 0) | ((vs[:, 0] == 0) & (vs[:, 1] > 0))
        vs, keys = vs[half], keys[half]
        if len(vs) == 0:
            return PaletteCount(interior, interior, 0, K_in, K_out)
        A2, B2, C2 = model.form_g2
        D2h = D * D // 2
        realized = np.zeros(len(vs), dtype=bool)
        bound_all = M - D2h * (K_in + 1)
        if bound_all >= 0:
            for p in ((0, 0), (0, 1), (1, 0), (1, 1)):
                cls = np.flatnonzero((vs[:, 0] % 2 == p[0]) & (vs[:, 1] % 2 == p[1]))
                if len(cls) == 0:
                    continue
                off = ((self.e[0] + (D // 2) * p[0]) % D, (self.e[1] + (D // 2) * p[1]) % D)
                j, dg = ellipse_points(A2, 2 * B2, C2, bound_all, D, off)
                if len(j) == 0:
                    continue
                d1 = D * j[:, 0] + off[0]
                d2 = D * j[:, 1] + off[1]
                order = np.argsort(dg, kind="stable")
                d1, d2, dg = d1[order], d2[order], dg[order]
                v = vs[cls]
                # D * v^T G2 Delta = D * (g1 . Delta) with g1 = G2 v
                g1 = D * (A2 * v[:, 0] + B2 * v[:, 1])
                g2 = D * (B2 * v[:, 0] + C2 * v[:, 1])
                rhs = M - D2h * keys[cls]
                # only Delta with Delta^T G2 Delta <= rhs can work; dg is sorted
                lim = np.searchsorted(dg, rhs, side="right")
                rows = max(1, self.batch // max(1, len(dg)))
                ok = np.zeros(len(cls), dtype=bool)
                for i0 in range(0, len(cls), rows):
                    sl = slice(i0, i0 + rows)
                    L = int(lim[sl].max())
                    if L == 0:
                        continue
                    lhs = np.abs(g1[sl, None] * d1[None, :L] + g2[sl, None] * d2[None, :L]) + dg[None, :L]
                    ok[sl] = np.any(lhs <= rhs[sl, None], axis=1)
                realized[cls] = ok
        annulus = int(len(np.unique(keys[realized])))
        return PaletteCount(interior + annulus, interior, annulus, K_in, K_out)

    def k(self, M: int) -> int:
        return self.count(M).k

    def next_norm(self, M: int) -> int:
        """Smallest scaled norm of a lattice point strictly above M."""
        A2, B2, C2 = self.model.form_g2
        step = max(8, M // 64)
        while True:
            _, vals = ellipse_points(A2, 2 * B2, C2, M + step, self.D, self.e, lower=M)
            if len(vals):
                return int(vals.min())
            step *= 2

    def realized_norm_at_most(self, M: int) -> int:
        """Largest scaled norm of a lattice point that is <= M (the window is unchanged)."""
        A2, B2, C2 = self.model.form_g2
        step = max(8, M // 64)
        while True:
            lo = M - step
            _, vals = ellipse_points(A2, 2 * B2, C2, M, self.D, self.e, lower=lo if lo >= 0 else None)
            if len(vals):
                return int(vals.max())
            if lo < 0:
                raise DDLabError("no lattice point in range")
            step *= 2


def disk_palette_size(model: LatticeModel, tau=ZERO2, z=ZERO2, R_sq=1, table=None) -> int:
    """|D((tau + Lambda) & B(z, R))| without forming the difference set."""
    pal = DiskPalette(model, RationalVec2.of(tau) - RationalVec2.of(z), table)
    return pal.k(pal.M_of(R_sq))


def resolve_center(model: LatticeModel, center) -> RationalVec2:
    if center in (None, "lattice"):
        return ZERO2
    if center == "deephole":
        return model.deep_hole()
    return RationalVec2.of(center)


@dataclass(frozen=True)
class ExtremalWitness:
    model: LatticeModel
    k: int
    center: RationalVec2
    offset: RationalVec2
    R_sq: Fraction
    n: int
    k_actual: int
    next_R_sq: Fraction
    k_next: int
    predicted_R_sq: float | None
    bernays: float | None

    @property
    def ratio_n(self) -> float:
        return self.n / (self.k * sqrt(log(self.k))) if self.k >= 2 else float("nan")

    @property
    def ratio_pred_a(self) -> float | None:
        """(pi/4) S* with the fitted Bernays constant."""
        if self.bernays is None:
            return None
        return pi / 4 * float(s_star(self.model, self.bernays).value)

    @property
    def ratio_pred_b(self) -> float | None:
        """pi / (3 C), the constant quoted for the hexagonal lattice."""
        return None if self.bernays is None else pi / (3 * self.bernays)

    def window(self, budget=None):
        return build_disk_window(self.model, self.offset, self.center, self.R_sq, budget)

    def to_json(self) -> dict:
        return {
            "lattice": self.model.label,
            "k": self.k,
            "z": self.center.to_json(),
            "offset": self.offset.to_json(),
            "R_sq": frac_str(self.R_sq),
            "n": self.n,
            "k_actual": self.k_actual,
            "next_R_sq": frac_str(self.next_R_sq),
            "k_next": self.k_next,
            "predicted_R_sq": self.predicted_R_sq,
            "bernays": self.bernays,
            "ratio_n": self.ratio_n,
            "ratio_pred_a": self.ratio_pred_a,
            "ratio_pred_b": self.ratio_pred_b,
        }


def predicted_R_sq(model: LatticeModel, k: int, C_est: float) -> float:
    """R^2 = s T / 4 with k = C T / sqrt(log T)."""
    return float(model.scale_s) * invert_k_to_T(k, C_est).T / 4


def construct_for_k(model: LatticeModel, k: int, center="lattice", tau=ZERO2, C_est: float | None = None,
                    table: RepTable | None = None) -> ExtremalWitness:
    """Largest R^2 (over realizable values) with |D(W_R)| <= k, by bisection on the scaled norm."""
    if k < 1:
        raise PreconditionError("k must be positive")
    z = resolve_center(model, center)
    tau = RationalVec2.of(tau)
    pal = DiskPalette(model, tau - z, table)
    pred = predicted_R_sq(model, k, C_est) if (C_est and k >= 3) else None
    hi = pal.M_of(pred) if pred else pal.M_of(model.lambda1_sq * 4)
    hi = max(hi, 1)
    while pal.k(hi) <= k:
        hi *= 2
    lo = -1      # k(-1) = 0 <= k; invariant: k(lo) <= k < k(hi)
    if pred:
        guess = pal.M_of(pred * 0.8)
        if 0 <= guess < hi and pal.k(guess) <= k:
            lo = guess
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if pal.k(mid) <= k:
            lo = mid
        else:
            hi = mid
    if lo < 0:
        raise DDLabError("no nonempty window has at most k distances")
    M = pal.realized_norm_at_most(lo)
    k_actual = pal.k(M)
    M_next = pal.next_norm(M)
    k_next = pal.k(M_next)
    if not (k_actual <= k < k_next):
        raise TheoremViolation("bisection produced a non-maximal witness")
    A2, B2, C2 = model.form_g2
    pts, _ = ellipse_points(A2, 2 * B2, C2, M, pal.D, pal.e)
    return ExtremalWitness(model, k, z, tau, pal.R_sq(M), len(pts), k_actual, pal.R_sq(M_next), k_next,
                           pred, C_est)


TABLE_COLUMNS = ["k", "n", "k_actual", "R_sq", "ratio_n", "ratio_pred_a", "ratio_pred_b",
                 "predicted_R_sq", "R_sq_lambda1", "R_sq_unimodular"]


def lower_bound_table(model: LatticeModel, k_grid, C_est: float, center="lattice", table=None) -> list[dict]:
    rows = []
    for k in k_grid:
        wit = construct_for_k(model, int(k), center, C_est=C_est, table=table)
        rows.append({
            "k": wit.k,
            "n": wit.n,
            "k_actual": wit.k_actual,
            "R_sq": frac_str(wit.R_sq),
            "ratio_n": wit.ratio_n,
            "ratio_pred_a": wit.ratio_pred_a,
            "ratio_pred_b": wit.ratio_pred_b,
            "predicted_R_sq": wit.predicted_R_sq,
            "R_sq_lambda1": float(wit.R_sq / model.lambda1_sq),
            "R_sq_unimodular": float(wit.R_sq) / model.covolume,
        })
    return rows


def write_table_csv(rows: list[dict], path_or_file) -> None:
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.DictWriter(fh, fieldnames=TABLE_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({c: r.get(c) for c in TABLE_COLUMNS})
    finally:
        if own:
            fh.close()


@dataclass(frozen=True)
class UpperBoundCurve:
    k: tuple
    C1: float
    closed_form: tuple
    fixed_point: tuple


def _least_M(k: float, C1: float, rtol: float = 1e-13) -> float:
    """Largest root of x = C1 k log x, i.e. the threshold past which C1 k log M < M."""
    a = C1 * k
    if a <= np.e:
        return 1.0           # a log x < x for every x > 1
    x = max(2 * a * log(a), a * np.e)
    for _ in range(10_000):
        x_new = a * log(x)
        if abs(x_new - x) <= rtol * x:
            return x_new
        x = x_new
    raise DDLabError("upper-bound fixed point did not converge")


def upper_bound_curve(k_grid, C1: float = 1.0) -> UpperBoundCurve:
    if not C1 > 0:
        raise PreconditionError("C1 must be positive")
    ks = tuple(float(k) for k in k_grid)
    closed = tuple(max(2 * C1 * k * log(k), 2 * C1 * k) for k in ks)
    fixed = tuple(_least_M(k, C1) for k in ks)
    for k, c, f in zip(ks, closed, fixed):
        if k >= 1e3 and c < f:
            raise TheoremViolation(f"closed form {c} below the fixed point {f} at k={k}")
    return UpperBoundCurve(ks, C1, closed, fixed)

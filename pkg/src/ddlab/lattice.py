"""Exact rank-2 lattices given by a rational Gram matrix.

A lattice is stored through its Gram matrix in a fixed basis (v1, v2); lattice
vectors are integer coordinate pairs u and Q(u) = |u1 v1 + u2 v2|^2. Ambient
coordinates are only produced for display and are floats.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import floor, gcd, lcm, pi, sqrt
from typing import NamedTuple

import mpmath
import numpy as np

from .errors import PreconditionError
from .exact import common_denominator, frac_str, to_fraction


class RationalVec2(NamedTuple):
    x: Fraction
    y: Fraction

    @classmethod
    def of(cls, v) -> "RationalVec2":
        return cls(to_fraction(v[0]), to_fraction(v[1]))

    def __sub__(self, other):
        return RationalVec2(self.x - other[0], self.y - other[1])

    def __add__(self, other):
        return RationalVec2(self.x + other[0], self.y + other[1])

    def to_json(self):
        return [frac_str(self.x), frac_str(self.y)]


ZERO2 = RationalVec2(Fraction(0), Fraction(0))


@dataclass(frozen=True)
class GramMatrix:
    g11: Fraction
    g12: Fraction
    g22: Fraction

    def __post_init__(self):
        for name in ("g11", "g12", "g22"):
            object.__setattr__(self, name, to_fraction(getattr(self, name)))

    @classmethod
    def of(cls, rows) -> "GramMatrix":
        (a, b), (b2, c) = rows
        if to_fraction(b) != to_fraction(b2):
            raise PreconditionError("Gram matrix must be symmetric")
        return cls(a, b, c)

    @property
    def det(self) -> Fraction:
        return self.g11 * self.g22 - self.g12 * self.g12

    def is_positive_definite(self) -> bool:
        return self.g11 > 0 and self.det > 0

    def q(self, u1, u2) -> Fraction:
        u1, u2 = to_fraction(u1), to_fraction(u2)
        return self.g11 * u1 * u1 + 2 * self.g12 * u1 * u2 + self.g22 * u2 * u2

    def bilinear(self, u, v) -> Fraction:
        return (self.g11 * u[0] * v[0] + self.g12 * (u[0] * v[1] + u[1] * v[0])
                + self.g22 * u[1] * v[1])

    def transform(self, U) -> "GramMatrix":
        """Gram matrix of the basis (v1, v2) @ U, i.e. U^T G U."""
        (p, q), (r, s) = U
        g11 = self.g11 * p * p + 2 * self.g12 * p * r + self.g22 * r * r
        g12 = self.g11 * p * q + self.g12 * (p * s + q * r) + self.g22 * r * s
        g22 = self.g11 * q * q + 2 * self.g12 * q * s + self.g22 * s * s
        return GramMatrix(g11, g12, g22)

    def is_reduced(self) -> bool:
        return self.g11 <= self.g22 and 2 * abs(self.g12) <= self.g11

    def rows(self):
        return [[self.g11, self.g12], [self.g12, self.g22]]

    def to_json(self):
        return [[frac_str(x) for x in row] for row in self.rows()]


@dataclass(frozen=True)
class QuadForm:
    """Integral binary quadratic form a x^2 + b x y + c y^2."""

    a: int
    b: int
    c: int

    def __post_init__(self):
        if self.a <= 0 or 4 * self.a * self.c - self.b * self.b <= 0:
            raise PreconditionError(f"form {self} is not positive definite")

    def __call__(self, x, y):
        return self.a * x * x + self.b * x * y + self.c * y * y

    @property
    def disc(self) -> int:
        return self.b * self.b - 4 * self.a * self.c

    @property
    def is_primitive(self) -> bool:
        return gcd(gcd(self.a, self.b), self.c) == 1

    def substitute(self, U) -> "QuadForm":
        """F(U x) as a new form; U is an integer 2x2 matrix."""
        (p, q), (r, s) = U
        a = self(p, r)
        c = self(q, s)
        b = 2 * self.a * p * q + self.b * (p * s + q * r) + 2 * self.c * r * s
        return QuadForm(a, b, c)

    def gram(self) -> GramMatrix:
        return GramMatrix(self.a, Fraction(self.b, 2), self.c)

    def __str__(self):
        return f"{self.a},{self.b},{self.c}"


def gauss_reduce(gram: GramMatrix):
    """Lagrange-Gauss reduction of a positive definite Gram matrix.

    Returns ``(U, reduced)`` where U is an integer matrix with det U = +1 and
    ``reduced = gram.transform(U)`` satisfies g11 <= g22 and 2|g12| <= g11.
    A Gram matrix that is already reduced comes back with U = identity.
    """
    if not gram.is_positive_definite():
        raise PreconditionError("Gram matrix is not positive definite")
    U = ((1, 0), (0, 1))
    G = gram
    if G.is_reduced():
        return U, G
    # columns b1, b2 of U track the current basis in original coordinates
    b1, b2 = [1, 0], [0, 1]
    while True:
        if G.g11 > G.g22:
            b1, b2 = b2, b1
            G = GramMatrix(G.g22, G.g12, G.g11)
        m = floor(G.g12 / G.g11 + Fraction(1, 2))
        if m == 0:
            break
        b2 = [b2[0] - m * b1[0], b2[1] - m * b1[1]]
        G = GramMatrix(G.g11, G.g12 - m * G.g11, G.g22 - 2 * m * G.g12 + m * m * G.g11)
        if G.g11 <= G.g22 and 2 * abs(G.g12) <= G.g11:
            break
    if b1[0] * b2[1] - b1[1] * b2[0] < 0:
        b2 = [-b2[0], -b2[1]]
        G = GramMatrix(G.g11, -G.g12, G.g22)
    U = ((b1[0], b2[0]), (b1[1], b2[1]))
    return U, G


def arithmetize(gram: GramMatrix) -> tuple[Fraction, QuadForm]:
    """Split Q = s * F with F primitive integral, in the same basis as ``gram``."""
    coeffs = (gram.g11, 2 * gram.g12, gram.g22)
    d = common_denominator(*coeffs)
    ints = [int(c * d) for c in coeffs]
    g = gcd(gcd(ints[0], ints[1]), ints[2])
    return Fraction(g, d), QuadForm(ints[0] // g, ints[1] // g, ints[2] // g)


def covering_radius_sq(reduced: GramMatrix) -> Fraction:
    """Squared circumradius of the Delaunay triangle {0, w1, w1 + w2}.

    With g12 <= 0 the vectors w1, w2, -w1-w2 form an obtuse superbasis, the
    triangle is non-obtuse, and its circumradius is the covering radius.
    """
    g11, g12, g22 = reduced.g11, -abs(reduced.g12), reduced.g22
    return g11 * g22 * (g11 + 2 * g12 + g22) / (4 * (g11 * g22 - g12 * g12))


def _deep_hole_reduced(reduced: GramMatrix):
    """Circumcenter of {0, w1, w1 + w2} (obtuse orientation) in reduced coordinates."""
    g11, g22 = reduced.g11, reduced.g22
    sign = -1 if reduced.g12 > 0 else 1
    g12 = -abs(reduced.g12)
    # c . w1 = |w1|^2 / 2 and c . (w1 + w2) = |w1 + w2|^2 / 2, c = x w1 + y w2'
    r1 = g11 / 2
    r2 = (g11 + 2 * g12 + g22) / 2
    # rows: (g11, g12) . (x, y) = r1 ; (g11 + g12, g12 + g22) . (x, y) = r2
    a11, a12, a21, a22 = g11, g12, g11 + g12, g12 + g22
    det = a11 * a22 - a12 * a21
    x = (r1 * a22 - a12 * r2) / det
    y = (a11 * r2 - a21 * r1) / det
    return x, sign * y


@dataclass(frozen=True)
class LatticeModel:
    gram: GramMatrix
    label: str = ""
    normalization: str = "native"
    change: tuple = field(init=False)
    reduced: GramMatrix = field(init=False)
    lambda1_sq: Fraction = field(init=False)
    covolume_sq: Fraction = field(init=False)
    covering_radius_sq: Fraction = field(init=False)
    scale_s: Fraction = field(init=False)
    form: QuadForm = field(init=False)

    def __post_init__(self):
        U, red = gauss_reduce(self.gram)
        s, F = arithmetize(self.gram)
        object.__setattr__(self, "change", U)
        object.__setattr__(self, "reduced", red)
        object.__setattr__(self, "lambda1_sq", red.g11)
        object.__setattr__(self, "covolume_sq", self.gram.det)
        object.__setattr__(self, "covering_radius_sq", covering_radius_sq(red))
        object.__setattr__(self, "scale_s", s)
        object.__setattr__(self, "form", F)

    @property
    def covolume(self) -> float:
        return sqrt(self.covolume_sq)

    @property
    def mu(self) -> float:
        return sqrt(self.covering_radius_sq)

    @property
    def lambda1(self) -> float:
        return sqrt(self.lambda1_sq)

    @cached_property
    def form_g2(self) -> tuple[int, int, int]:
        """Integer matrix [[2a, b], [b, 2c]] with Q(u) = (s/2) u^T G2 u."""
        F = self.form
        return 2 * F.a, F.b, 2 * F.c

    @cached_property
    def basis(self) -> np.ndarray:
        """Ambient basis vectors (rows) from a Cholesky factor; display only."""
        g11, g12, g22 = (float(x) for x in (self.gram.g11, self.gram.g12, self.gram.g22))
        v1 = np.array([sqrt(g11), 0.0])
        v2 = np.array([g12 / sqrt(g11), sqrt(g22 - g12 * g12 / g11)])
        return np.stack([v1, v2])

    def q(self, u1, u2) -> Fraction:
        return self.gram.q(u1, u2)

    def key(self, u1: int, u2: int) -> int:
        return self.form(u1, u2)

    def deep_hole(self) -> RationalVec2:
        """A deep hole (point at distance mu from the lattice), in model coordinates."""
        x, y = _deep_hole_reduced(self.reduced)
        (p, q), (r, s) = self.change
        return RationalVec2(p * x + q * y, r * x + s * y)

    def normalized_constants(self, kind: str | None = None) -> dict:
        """Derived constants after rescaling squared lengths.

        ``lambda1`` scales so the shortest vector has length 1, ``unimodular``
        so the covolume is 1, ``native`` leaves the Gram matrix as given.
        """
        kind = kind or self.normalization
        if kind == "native":
            f = 1.0
        elif kind == "lambda1":
            f = 1.0 / float(self.lambda1_sq)
        elif kind == "unimodular":
            f = 1.0 / self.covolume
        else:
            raise PreconditionError(f"unknown normalization {kind!r}")
        return {
            "normalization": kind,
            "s": f * float(self.scale_s),
            "covolume": f * self.covolume,
            "lambda1": sqrt(f * float(self.lambda1_sq)),
            "mu": sqrt(f * float(self.covering_radius_sq)),
        }

    def describe(self) -> dict:
        return {
            "label": self.label,
            "gram": self.gram.to_json(),
            "change_of_basis": [list(r) for r in self.change],
            "reduced_gram": self.reduced.to_json(),
            "lambda1_sq": frac_str(self.lambda1_sq),
            "covolume_sq": frac_str(self.covolume_sq),
            "covering_radius_sq": frac_str(self.covering_radius_sq),
            "scale_s": frac_str(self.scale_s),
            "form": [self.form.a, self.form.b, self.form.c],
            "normalized": {k: self.normalized_constants(k) for k in ("native", "lambda1", "unimodular")},
        }


def derive_constants(basis=None, *, gram=None, label="", normalization="native") -> LatticeModel:
    """Build a LatticeModel from two rational ambient vectors or a Gram matrix."""
    if gram is None:
        if basis is None:
            raise PreconditionError("need a basis or a Gram matrix")
        v1, v2 = RationalVec2.of(basis[0]), RationalVec2.of(basis[1])
        if v1.x * v2.y - v1.y * v2.x == 0:
            raise PreconditionError("basis vectors are parallel")
        gram = GramMatrix(v1.x * v1.x + v1.y * v1.y, v1.x * v2.x + v1.y * v2.y,
                          v2.x * v2.x + v2.y * v2.y)
    elif not isinstance(gram, GramMatrix):
        gram = GramMatrix.of(gram)
    if not gram.is_positive_definite():
        raise PreconditionError("degenerate or indefinite Gram matrix")
    return LatticeModel(gram, label=label, normalization=normalization)


BUILTIN_GRAMS = {
    "Z2": (GramMatrix(1, 0, 1), "native"),
    "hex": (GramMatrix(1, Fraction(1, 2), 1), "lambda1"),
    "hex-unimodular": (GramMatrix(1, Fraction(1, 2), 1), "unimodular"),
}


def builtin(label: str) -> LatticeModel:
    try:
        gram, norm = BUILTIN_GRAMS[label]
    except KeyError:
        raise PreconditionError(f"unknown lattice label {label!r}; known: {sorted(BUILTIN_GRAMS)}")
    return LatticeModel(gram, label=label, normalization=norm)


@dataclass(frozen=True)
class SStarValue:
    value: mpmath.mpf
    s: mpmath.mpf
    covolume: mpmath.mpf
    bernays: mpmath.mpf

    def __float__(self):
        return float(self.value)


def s_star(model: LatticeModel, bernays_estimate, normalization: str | None = None) -> SStarValue:
    """s / (covolume * C) in 40-digit arithmetic; invariant under rescaling."""
    if not bernays_estimate > 0:
        raise PreconditionError("Bernays estimate must be positive")
    kind = normalization or model.normalization
    with mpmath.workdps(40):
        s = mpmath.mpf(model.scale_s.numerator) / model.scale_s.denominator
        cov = mpmath.sqrt(mpmath.mpf(model.covolume_sq.numerator) / model.covolume_sq.denominator)
        if kind == "lambda1":
            f = mpmath.mpf(model.lambda1_sq.denominator) / model.lambda1_sq.numerator
        elif kind == "unimodular":
            f = 1 / cov
        else:
            f = mpmath.mpf(1)
        s, cov = s * f, cov * f
        C = mpmath.mpf(bernays_estimate)
        return SStarValue(s / (cov * C), s, cov, C)


def hex_constant_ratio() -> float:
    """(pi/4) S* divided by pi/(3 C) on the hexagonal lattice: 3 / (2 sqrt 3)."""
    return 3 / (2 * sqrt(3))


def disk_area_over_covolume(model: LatticeModel, R_sq) -> float:
    return pi * float(R_sq) / model.covolume

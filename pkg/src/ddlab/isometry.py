"""Brute-force enumeration of the direct isometries mapping >= 2 points into X.

Every ordered pair of equal-length ordered pairs ((p, q), (p', q')) fixes a
unique rotation-plus-translation g with g(p) = p', g(q) = q'. In lattice
coordinates g(u) = (N u + T) / den with integers N (2x2), T, den, because the
Gram matrix is rational. That integer tuple, reduced by its gcd, is the key.

This is an O(n^4) oracle and refuses inputs larger than ``cap``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError, TheoremViolation
from .pointset import LatticePointSet
from .spectrum import distance_spectrum, keys_of, shift_histogram

DEFAULT_CAP = 80


@dataclass(frozen=True)
class IsometrySpectrum:
    keys: np.ndarray          # (G, 7): N11, N12, N21, N22, T1, T2, den
    r: np.ndarray             # r_g for each key
    is_translation: np.ndarray  # nonidentity translations
    is_identity: np.ndarray
    q_star: int               # number of matched quadruples
    q_ord: int
    max_isometries_per_pair: int

    @property
    def identity_sum(self) -> int:
        return int(np.sum(self.r * (self.r - 1)))

    @property
    def translation_sq(self) -> int:
        r = self.r[self.is_translation]
        return int(np.dot(r, r))

    @property
    def nontranslation_sq(self) -> int:
        r = self.r[~self.is_translation & ~self.is_identity]
        return int(np.dot(r, r))

    @property
    def translation_pairs(self) -> int:
        r = self.r[self.is_translation]
        return int(np.sum(r * (r - 1)))

    @property
    def r_sum(self) -> int:
        return int(self.r.sum())


def _motion_keys(model, P, Qp, P2, Q2):
    """Normalized integer keys of the motions sending (P, Qp) to (P2, Q2)."""
    A2, B2, C2 = model.form_g2   # G2 = [[A2, B2], [B2, C2]]
    d = Qp - P
    e = Q2 - P2
    qd = A2 * d[:, 0] ** 2 + 2 * B2 * d[:, 0] * d[:, 1] + C2 * d[:, 1] ** 2
    dot = (A2 * d[:, 0] * e[:, 0] + B2 * (d[:, 0] * e[:, 1] + d[:, 1] * e[:, 0])
           + C2 * d[:, 1] * e[:, 1])
    cross = d[:, 0] * e[:, 1] - d[:, 1] * e[:, 0]
    # N = dot * I + cross * J2 with J2 = [[-B2, -C2], [A2, B2]]
    n11 = dot - cross * B2
    n12 = -cross * C2
    n21 = cross * A2
    n22 = dot + cross * B2
    t1 = qd * P2[:, 0] - (n11 * P[:, 0] + n12 * P[:, 1])
    t2 = qd * P2[:, 1] - (n21 * P[:, 0] + n22 * P[:, 1])
    K = np.stack([n11, n12, n21, n22, t1, t2, qd], axis=1)
    g = np.gcd.reduce(np.abs(K), axis=1)
    return K // g[:, None]


def apply_motion(key, pts: np.ndarray):
    """Images of integer points under a motion key; rows that leave Z^2 are flagged."""
    n11, n12, n21, n22, t1, t2, den = (int(x) for x in key)
    x = n11 * pts[:, 0] + n12 * pts[:, 1] + t1
    y = n21 * pts[:, 0] + n22 * pts[:, 1] + t2
    ok = (x % den == 0) & (y % den == 0)
    return np.stack([x // den, y // den], axis=1), ok


def isometry_spectrum(X: LatticePointSet, cap: int = DEFAULT_CAP) -> IsometrySpectrum:
    n = X.n
    if n > cap:
        raise PreconditionError(f"isometry oracle limited to {cap} points (got {n}); subsample first")
    if n < 2:
        raise PreconditionError("need at least two points")
    pts = X.points
    I, J = np.nonzero(~np.eye(n, dtype=bool))
    pair_keys = keys_of(X.model, pts[J] - pts[I])
    order = np.argsort(pair_keys, kind="stable")
    I, J, pair_keys = I[order], J[order], pair_keys[order]
    bounds = np.flatnonzero(np.diff(pair_keys)) + 1
    starts = np.r_[0, bounds]
    ends = np.r_[bounds, len(pair_keys)]

    all_keys = []
    per_pair_max = 0
    q_star = 0
    for s, e in zip(starts, ends):
        m = e - s
        q_star += m * m
        a = np.repeat(np.arange(s, e), m)
        b = np.tile(np.arange(s, e), m)
        K = _motion_keys(X.model, pts[I[a]], pts[J[a]], pts[I[b]], pts[J[b]])
        all_keys.append(K)
        per_pair_max = max(per_pair_max, m)
    K = np.concatenate(all_keys)
    uniq, quad_counts = np.unique(K, axis=0, return_counts=True)

    # r_g measured directly by applying g to every point
    lo = pts.min(axis=0) - 1
    span = int(pts[:, 1].max() - lo[1]) + 2
    codes = np.sort((pts[:, 0] - lo[0]) * span + (pts[:, 1] - lo[1]))
    hi0 = int(pts[:, 0].max())
    r = np.zeros(len(uniq), dtype=np.int64)
    x0, y0 = pts[:, 0][None, :], pts[:, 1][None, :]
    step = max(1, 2_000_000 // n)
    for c0 in range(0, len(uniq), step):
        U = uniq[c0:c0 + step]
        den = U[:, 6:7]
        x = U[:, 0:1] * x0 + U[:, 1:2] * y0 + U[:, 4:5]
        y = U[:, 2:3] * x0 + U[:, 3:4] * y0 + U[:, 5:6]
        ok = (x % den == 0) & (y % den == 0)
        x, y = x // den, y // den
        ok &= (x >= lo[0]) & (x <= hi0) & (y > lo[1]) & (y < lo[1] + span)
        c = np.where(ok, (x - lo[0]) * span + (y - lo[1]), -1)
        j = np.minimum(np.searchsorted(codes, c), len(codes) - 1)
        r[c0:c0 + step] = np.count_nonzero(ok & (codes[j] == c), axis=1)
    if np.any(r < 2):
        raise TheoremViolation("an enumerated motion maps fewer than two points into X")

    den = uniq[:, 6]
    is_t = (uniq[:, 0] == den) & (uniq[:, 3] == den) & (uniq[:, 1] == 0) & (uniq[:, 2] == 0)
    is_id = is_t & (uniq[:, 4] == 0) & (uniq[:, 5] == 0)
    spec = distance_spectrum(X)
    res = IsometrySpectrum(uniq, r, is_t & ~is_id, is_id, q_star, spec.q_ord(), per_pair_max)
    if not np.array_equal(quad_counts, r * (r - 1)):
        raise TheoremViolation("quadruple count per motion differs from r_g (r_g - 1)")
    return res


def translation_identity_rhs(X) -> int:
    """sum over v != 0 of r(v)(r(v) - 1), from the shift histogram."""
    h = shift_histogram(X)
    return int(np.sum(h.counts * (h.counts - 1)))

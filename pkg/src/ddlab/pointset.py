from dataclasses import dataclass, field

import numpy as np

from .errors import PreconditionError
from .lattice import ZERO2, LatticeModel, RationalVec2


@dataclass(frozen=True, eq=False)
class LatticePointSet:
    """Points tau + u1 v1 + u2 v2 for integer rows (u1, u2) of ``points``.

    The offset tau is given in lattice coordinates. Duplicate rows are dropped,
    keeping first occurrences in input order.
    """

    model: LatticeModel
    points: np.ndarray
    offset: RationalVec2 = ZERO2
    _index: dict = field(default=None, repr=False)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.int64).reshape(-1, 2)
        if len(pts) == 0:
            raise PreconditionError("point set is empty")
        _, first = np.unique(pts, axis=0, return_index=True)
        if len(first) != len(pts):
            pts = pts[np.sort(first)]
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "offset", RationalVec2.of(self.offset))

    def __len__(self):
        return len(self.points)

    @property
    def n(self) -> int:
        return len(self.points)

    def index(self) -> dict:
        if self._index is None:
            object.__setattr__(self, "_index", {(int(a), int(b)): i for i, (a, b) in enumerate(self.points)})
        return self._index

    def __contains__(self, u) -> bool:
        return (int(u[0]), int(u[1])) in self.index()

    def subset(self, mask_or_idx) -> "LatticePointSet":
        return LatticePointSet(self.model, self.points[mask_or_idx], self.offset)

    def ambient(self) -> np.ndarray:
        """Float ambient coordinates, for plotting and reports only."""
        tau = np.array([float(self.offset.x), float(self.offset.y)])
        return (self.points + tau) @ self.model.basis

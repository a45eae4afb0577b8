"""Finite hypercubic lattices with periodic or Neumann (free) boundaries."""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field

import numpy as np


class BoundaryCondition(str, enum.Enum):
    PERIODIC = "periodic"
    NEUMANN = "neumann"


@dataclass(frozen=True)
class Lattice:
    """Box ``extents[0] x ... x extents[d-1]`` in Z^d, sites indexed row-major.

    Site ``j`` has coordinates ``np.unravel_index(j, extents)`` (C order), so
    the last axis varies fastest.
    """

    extents: tuple[int, ...]
    bc: BoundaryCondition = BoundaryCondition.NEUMANN
    _nbrs: tuple[tuple[int, ...], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ext = tuple(int(e) for e in self.extents)
        if not ext or any(e < 1 for e in ext):
            raise ValueError(f"extents must be positive integers, got {self.extents!r}")
        object.__setattr__(self, "extents", ext)
        object.__setattr__(self, "bc", BoundaryCondition(self.bc))
        object.__setattr__(self, "_nbrs", tuple(self._build_neighbors(j) for j in range(self.n_sites)))

    @classmethod
    def chain(cls, n: int, bc="neumann") -> "Lattice":
        return cls((n,), bc)

    @property
    def d(self) -> int:
        return len(self.extents)

    @property
    def n_sites(self) -> int:
        return math.prod(self.extents)

    def __len__(self) -> int:
        return self.n_sites

    def coords(self, j: int) -> tuple[int, ...]:
        self._check(j)
        return tuple(int(c) for c in np.unravel_index(j, self.extents))

    def index(self, coords) -> int:
        coords = tuple(int(c) for c in coords)
        if len(coords) != self.d or any(not 0 <= c < e for c, e in zip(coords, self.extents)):
            raise ValueError(f"coordinates {coords} outside lattice {self.extents}")
        return int(np.ravel_multi_index(coords, self.extents))

    def _check(self, j) -> None:
        if not isinstance(j, (int, np.integer)) or not 0 <= j < self.n_sites:
            raise IndexError(f"site {j!r} not in 0..{self.n_sites - 1}")

    def _build_neighbors(self, j: int) -> tuple[int, ...]:
        c = list(np.unravel_index(j, self.extents))
        out: list[int] = []
        for axis, L in enumerate(self.extents):
            for step in (-1, 1):
                k = c[axis] + step
                if self.bc is BoundaryCondition.PERIODIC:
                    k %= L
                elif not 0 <= k < L:
                    continue
                nb = c.copy()
                nb[axis] = k
                idx = int(np.ravel_multi_index(nb, self.extents))
                # extents 1 or 2 under periodic bc would give self-loops or repeats
                if idx != j and idx not in out:
                    out.append(idx)
        return tuple(out)

    def neighbors(self, j: int) -> list[int]:
        """Nearest neighbours of ``j`` in axis order, minus side first."""
        self._check(j)
        return list(self._nbrs[j])

    def degree(self, j: int) -> int:
        self._check(j)
        return len(self._nbrs[j])

    def edges(self) -> list[tuple[int, int]]:
        """Unordered nearest-neighbour pairs ``(j, k)`` with ``j < k``, sorted."""
        return sorted({(min(j, k), max(j, k)) for j in range(self.n_sites) for k in self._nbrs[j]})

    def edge_array(self) -> np.ndarray:
        e = self.edges()
        return np.array(e, dtype=np.int64).reshape(len(e), 2)

    def adjacency(self) -> np.ndarray:
        a = np.zeros((self.n_sites, self.n_sites))
        for j, k in self.edges():
            a[j, k] = a[k, j] = 1.0
        return a

    def laplacian(self) -> np.ndarray:
        a = self.adjacency()
        return np.diag(a.sum(axis=1)) - a

    def _axis_deltas(self, x: int, y: int) -> list[int]:
        cx, cy = self.coords(x), self.coords(y)
        out = []
        for a, b, L in zip(cx, cy, self.extents):
            delta = abs(a - b)
            if self.bc is BoundaryCondition.PERIODIC:
                delta = min(delta, L - delta)
            out.append(delta)
        return out

    def distance(self, x: int, y: int) -> float:
        """Euclidean distance, periodized coordinate-wise under periodic bc."""
        return math.sqrt(sum(v * v for v in self._axis_deltas(x, y)))

    def graph_distance(self, x: int, y: int) -> int:
        """L1 (shortest nearest-neighbour path) distance."""
        return sum(self._axis_deltas(x, y))

    def sites(self):
        return range(self.n_sites)

    def all_coords(self):
        return itertools.product(*(range(e) for e in self.extents))

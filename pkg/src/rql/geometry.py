"""Atom-array geometries ordered along the perimeter of the array."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Literal

import numpy as np

Boundary = Literal["periodic", "open"]


class GeometryError(ValueError):
    """Raised for inconsistent lattice specifications."""


@dataclass(frozen=True, eq=False)
class LatticeGeometry:
    """Ordered 2D atom positions in µm.

    The row order is the perimeter index: site ``i`` neighbours ``i±1``
    (nearest) and ``i±2`` (next-nearest), wrapping around when the boundary is
    periodic.
    """

    positions: np.ndarray
    boundary: Boundary = "periodic"

    def __post_init__(self):
        pos = np.array(self.positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 2:
            raise GeometryError("positions must be an (n, 2) array")
        if self.boundary not in ("periodic", "open"):
            raise GeometryError(f"unknown boundary {self.boundary!r}")
        if len(pos) < 2:
            raise GeometryError("need at least two atoms")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)
        if not self.min_pair_distance() > 0:
            raise GeometryError("two atoms share a position")

    @property
    def n_sites(self) -> int:
        return len(self.positions)

    def nn_pairs(self) -> np.ndarray:
        return bond_pairs(self.n_sites, 1, self.boundary)

    def nnn_pairs(self) -> np.ndarray:
        return bond_pairs(self.n_sites, 2, self.boundary)

    def distances(self, pairs: np.ndarray, positions: np.ndarray | None = None) -> np.ndarray:
        pos = self.positions if positions is None else np.asarray(positions, dtype=float)
        if len(pairs) == 0:
            return np.zeros(0)
        return np.linalg.norm(pos[pairs[:, 0]] - pos[pairs[:, 1]], axis=1)

    def min_pair_distance(self) -> float:
        diff = self.positions[:, None, :] - self.positions[None, :, :]
        d = np.linalg.norm(diff, axis=-1)
        return float(d[np.triu_indices(self.n_sites, 1)].min())

    def to_json(self) -> str:
        return json.dumps({"positions_um": self.positions.tolist(), "boundary": self.boundary})

    @classmethod
    def from_json(cls, text: str) -> "LatticeGeometry":
        data = json.loads(text)
        return cls(np.array(data["positions_um"], dtype=float), data["boundary"])


def bond_pairs(n_sites: int, distance: int, boundary: Boundary) -> np.ndarray:
    """Index pairs ``(i, i + distance)`` following the lattice-sum convention.

    Periodic chains keep all ``n_sites`` terms of the wrapped sum, open chains
    drop the ones that would cross the boundary.
    """
    if boundary == "periodic":
        i = np.arange(n_sites)
        return np.stack([i, (i + distance) % n_sites], axis=1)
    i = np.arange(max(n_sites - distance, 0))
    return np.stack([i, i + distance], axis=1).reshape(-1, 2)


def ring_rectangle(n_atoms: int, a: float, aspect: tuple[int, int]) -> LatticeGeometry:
    """Atoms on the perimeter of an ``nx × ny`` rectangle with spacing ``a``.

    Corners are shared between edges so the ring holds ``2(nx + ny) - 4``
    atoms. Ordering runs counter-clockwise from the lower-left corner.
    """
    nx, ny = (int(v) for v in aspect)
    if nx < 2 or ny < 2:
        raise GeometryError("each rectangle side needs at least two sites")
    if n_atoms < 4 or n_atoms != 2 * (nx + ny) - 4:
        raise GeometryError(
            f"{n_atoms} atoms do not fit a {nx}x{ny} perimeter ({2 * (nx + ny) - 4} sites)"
        )
    if not a > 0:
        raise GeometryError("lattice constant must be positive")
    pts = [(x, 0) for x in range(nx)]
    pts += [(nx - 1, y) for y in range(1, ny)]
    pts += [(x, ny - 1) for x in range(nx - 2, -1, -1)]
    pts += [(0, y) for y in range(ny - 2, 0, -1)]
    return LatticeGeometry(a * np.array(pts, dtype=float), "periodic")


def straight_chain(n_atoms: int, a: float) -> LatticeGeometry:
    """Open chain along x. Useful for collinear coupling checks."""
    if n_atoms < 2 or not a > 0:
        raise GeometryError("need n_atoms >= 2 and a > 0")
    pos = np.zeros((n_atoms, 2))
    pos[:, 0] = a * np.arange(n_atoms)
    return LatticeGeometry(pos, "open")

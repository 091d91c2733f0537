"""Classical thermal motion of the trapped atoms.

Atoms start Gaussian-distributed around their lattice sites with
Maxwell-Boltzmann velocities and move ballistically. There is no backaction
from the spin state on the trajectories.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .constants import DEFAULT_CONSTANTS, PhysicalConstants
from .geometry import LatticeGeometry


@dataclass(frozen=True, eq=False)
class AtomTrajectorySet:
    r0: np.ndarray  # (n, 2) µm
    v: np.ndarray  # (n, 2) µm/µs
    seed: int = 0

    def positions_at(self, t: float) -> np.ndarray:
        return positions_at(self, t)

    def to_json(self) -> str:
        return json.dumps({"r0_um": np.asarray(self.r0).tolist(),
                           "v_um_per_us": np.asarray(self.v).tolist(),
                           "seed": self.seed})

    @classmethod
    def from_json(cls, text: str) -> "AtomTrajectorySet":
        d = json.loads(text)
        return cls(np.array(d["r0_um"], dtype=float), np.array(d["v_um_per_us"], dtype=float), int(d["seed"]))


def velocity_std(temperature: float, const: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """Per-axis thermal velocity spread √(k_B T / m) in µm/µs."""
    return float(np.sqrt(const.k_b * temperature / const.atom_mass))


def sample_trajectories(geom: LatticeGeometry, delta_r: float, temperature: float,
                        const: PhysicalConstants = DEFAULT_CONSTANTS, seed: int = 0) -> AtomTrajectorySet:
    if delta_r < 0 or temperature < 0:
        raise ValueError("delta_r and temperature must be non-negative")
    rng = np.random.default_rng(seed)
    n = geom.n_sites
    r0 = geom.positions + delta_r * rng.standard_normal((n, 2))
    v = velocity_std(temperature, const) * rng.standard_normal((n, 2))
    return AtomTrajectorySet(r0, v, int(seed))


def positions_at(traj: AtomTrajectorySet, t: float) -> np.ndarray:
    if t < 0:
        raise ValueError("t must be non-negative")
    return traj.r0 + traj.v * t


class ForceEstimate(NamedTuple):
    force: float  # N
    accel: float  # m/s^2
    dv_at_4us: float  # m/s
    dx_at_4us: float  # µm


def rydberg_force_estimate(a: float, const: PhysicalConstants = DEFAULT_CONSTANTS,
                           duration: float = 4.0) -> ForceEstimate:
    """vdW force between two Rydberg atoms at distance ``a`` (µm).

    Diagnostic only: the result never enters the trajectories.
    """
    if not a > 0:
        raise ValueError("lattice constant must be positive")
    c6_joule = const.hbar * const.c6_si  # J m^6
    a_m = a * 1e-6
    force = 6.0 * c6_joule / a_m**7
    accel = force / const.atom_mass
    tau = duration * 1e-6
    return ForceEstimate(force, accel, accel * tau, 0.5 * accel * tau**2 * 1e6)

"""Ising parameter algebra for the Rydberg array at the TFIM limit.

The spin model is

    H = Σ j_nn σᶻσᶻ + Σ j_nnn σᶻσᶻ + h_x Σ σˣ − Σ h_z,i σᶻ_i

with σᶻ = +1 on the Rydberg state. Couplings follow J = C6 / (4 d⁶).
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .constants import DEFAULT_CONSTANTS, PhysicalConstants
from .geometry import Boundary, LatticeGeometry, bond_pairs

#: ratio of the critical transverse field to J for the vdW-coupled chain
QCP_RATIO = 1.027


class SingularCouplingError(ValueError):
    """Two atoms share a position, so the vdW coupling diverges."""


def _frozen(x, dtype=float) -> np.ndarray:
    arr = np.array(x, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class HamiltonianTerms:
    """Couplings and fields of one instantaneous spin Hamiltonian (rad/µs)."""

    n_sites: int
    nn_pairs: np.ndarray
    j_nn: np.ndarray
    nnn_pairs: np.ndarray
    j_nnn: np.ndarray
    h_x: float = 0.0
    h_z: np.ndarray = None
    site_detuning_offsets: np.ndarray = None

    def __post_init__(self):
        L = int(self.n_sites)
        object.__setattr__(self, "n_sites", L)
        nn = _frozen(np.reshape(self.nn_pairs, (-1, 2)), np.int64)
        nnn = _frozen(np.reshape(self.nnn_pairs, (-1, 2)), np.int64)
        j_nn = _frozen(self.j_nn)
        j_nnn = _frozen(self.j_nnn)
        if len(j_nn) != len(nn) or len(j_nnn) != len(nnn):
            raise ValueError("coupling list lengths must match bond counts")
        h_z = np.zeros(L) if self.h_z is None else self.h_z
        offsets = np.zeros(L) if self.site_detuning_offsets is None else self.site_detuning_offsets
        h_z, offsets = _frozen(h_z), _frozen(offsets)
        if h_z.shape != (L,) or offsets.shape != (L,):
            raise ValueError("per-site field lists must have n_sites entries")
        for pairs in (nn, nnn):
            if pairs.size and (pairs.min() < 0 or pairs.max() >= L):
                raise ValueError("bond index out of range")
        object.__setattr__(self, "nn_pairs", nn)
        object.__setattr__(self, "nnn_pairs", nnn)
        object.__setattr__(self, "j_nn", j_nn)
        object.__setattr__(self, "j_nnn", j_nnn)
        object.__setattr__(self, "h_x", float(self.h_x))
        object.__setattr__(self, "h_z", h_z)
        object.__setattr__(self, "site_detuning_offsets", offsets)

    @property
    def pairs(self) -> np.ndarray:
        return np.concatenate([self.nn_pairs, self.nnn_pairs])

    @property
    def couplings(self) -> np.ndarray:
        return np.concatenate([self.j_nn, self.j_nnn])

    def with_fields(self, h_x: float, h_z: Sequence[float] | float = 0.0,
                    site_detuning_offsets: Sequence[float] | None = None) -> "HamiltonianTerms":
        h_z = np.broadcast_to(np.asarray(h_z, dtype=float), (self.n_sites,))
        kw = dict(h_x=h_x, h_z=h_z)
        if site_detuning_offsets is not None:
            kw["site_detuning_offsets"] = site_detuning_offsets
        return replace(self, **kw)

    def local_ising_shift(self) -> np.ndarray:
        """Σ_j j_ij for every site: the σᶻ_i coefficient generated by n_i n_j terms."""
        shift = np.zeros(self.n_sites)
        for pairs, j in ((self.nn_pairs, self.j_nn), (self.nnn_pairs, self.j_nnn)):
            np.add.at(shift, pairs[:, 0], j)
            np.add.at(shift, pairs[:, 1], j)
        return shift


def nn_coupling(a: float, const: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """J = C6 / (4 a⁶)."""
    return const.c6 / (4.0 * a**6)


def couplings_from_positions(geom: LatticeGeometry, const: PhysicalConstants = DEFAULT_CONSTANTS,
                             positions: np.ndarray | None = None) -> HamiltonianTerms:
    """NN and NNN couplings C6 / (4 d⁶) from actual pair distances.

    ``positions`` overrides the lattice sites while keeping the perimeter
    ordering of ``geom`` (used for moving atoms).
    """
    nn, nnn = geom.nn_pairs(), geom.nnn_pairs()
    d_nn = geom.distances(nn, positions)
    d_nnn = geom.distances(nnn, positions)
    if np.any(d_nn <= 0) or np.any(d_nnn <= 0):
        raise SingularCouplingError("coincident atoms give a divergent coupling")
    return HamiltonianTerms(
        n_sites=geom.n_sites,
        nn_pairs=nn,
        j_nn=const.c6 / (4.0 * d_nn**6),
        nnn_pairs=nnn,
        j_nnn=const.c6 / (4.0 * d_nnn**6),
    )


def uniform_chain_terms(n_sites: int, a: float, const: PhysicalConstants = DEFAULT_CONSTANTS,
                        boundary: Boundary = "periodic", nnn: bool = True) -> HamiltonianTerms:
    """Translation-invariant chain with J on NN bonds and J/2⁶ on NNN bonds."""
    j = nn_coupling(a, const)
    nn_pairs = bond_pairs(n_sites, 1, boundary)
    nnn_pairs = bond_pairs(n_sites, 2, boundary) if nnn else np.zeros((0, 2), np.int64)
    return HamiltonianTerms(
        n_sites=n_sites,
        nn_pairs=nn_pairs,
        j_nn=np.full(len(nn_pairs), j),
        nnn_pairs=nnn_pairs,
        j_nnn=np.full(len(nnn_pairs), j / 2**6),
    )


def delta_ising(a: float, const: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """Detuning that cancels the longitudinal field: 4J(1 + 1/2⁶)."""
    if not a > 0:
        raise ValueError("lattice constant must be positive")
    return 4.0 * nn_coupling(a, const) * (1.0 + 1.0 / 2**6)


def tfim_fields(omega: float, delta: float, delta_ising: float) -> tuple[float, float]:
    """Map (Ω, Δ) to (h_x, h_z)."""
    return omega / 2.0, (delta - delta_ising) / 2.0


def critical_field(j: float) -> float:
    return QCP_RATIO * j


@dataclass(frozen=True)
class QuenchProtocol:
    """Linear ramp of Ω and Δ over ``ramp_duration`` followed by a hold.

    All times are in µs and all frequencies in rad/µs. ``delta_hold`` is the
    detuning reached at the end of the ramp; :meth:`tfim` sets it to Δ_ising.
    """

    omega_target: float
    delta_hold: float
    ramp_duration: float = 0.05
    delta_initial: float = -125.0
    total_time: float = 4.0
    dt: float = 0.01

    def __post_init__(self):
        if not 0 < self.ramp_duration < self.total_time:
            raise ValueError("need 0 < ramp_duration < total_time")
        if not 0 < self.dt <= self.ramp_duration:
            raise ValueError("need 0 < dt <= ramp_duration")
        n = self.total_time / self.dt
        if abs(n - round(n)) > 1e-9 * max(1.0, n):
            raise ValueError("total_time must be an integer multiple of dt")

    @classmethod
    def tfim(cls, omega: float, a: float, const: PhysicalConstants = DEFAULT_CONSTANTS,
             **kw) -> "QuenchProtocol":
        return cls(omega_target=omega, delta_hold=delta_ising(a, const), **kw)

    @property
    def n_steps(self) -> int:
        return int(round(self.total_time / self.dt))

    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_steps + 1)

    def ramp_fraction(self, t: float) -> float:
        return min(max(t / self.ramp_duration, 0.0), 1.0)

    def omega_at(self, t: float) -> float:
        return self.omega_target * self.ramp_fraction(t)

    def delta_at(self, t: float) -> float:
        s = self.ramp_fraction(t)
        return self.delta_initial + s * (self.delta_hold - self.delta_initial)

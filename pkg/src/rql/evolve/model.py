"""Time-dependent Hamiltonians of the four model variants."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from ..constants import DEFAULT_CONSTANTS, PhysicalConstants
from ..disorder import DisorderRealization, NoiseTrajectory, ShotFluctuation
from ..geometry import Boundary, LatticeGeometry, bond_pairs
from ..hamiltonian import (
    HamiltonianTerms,
    QuenchProtocol,
    couplings_from_positions,
    delta_ising,
    uniform_chain_terms,
)
from ..motion import AtomTrajectorySet
from .kernel import DiagonalPlusField, check_size, expm_krylov
from .state import SpinState, amplitudes_of

TAGS = ("ideal", "motion", "minimal", "minimal_decohering")
SPECTRUM_MAX_L = 14


class VariantError(ValueError):
    """Attachments do not match the model tag."""


@dataclass(frozen=True, eq=False)
class ModelVariant:
    """One realization of a model: the tag plus its random attachments.

    ``detuning_offsets`` (rad/µs, per site) and ``shot`` are optional for
    every tag. ``nnn`` toggles next-nearest couplings of the uniform ideal
    chain; the minimal model is nearest-neighbour only.
    """

    tag: str
    n_sites: int
    a: float
    boundary: Boundary = "periodic"
    trajectories: AtomTrajectorySet | None = None
    disorder: DisorderRealization | None = None
    noise: NoiseTrajectory | None = None
    detuning_offsets: np.ndarray | None = None
    shot: ShotFluctuation | None = None
    nnn: bool = True

    def __post_init__(self):
        if self.tag not in TAGS:
            raise VariantError(f"unknown model {self.tag!r}; expected one of {TAGS}")
        need_traj = self.tag == "motion"
        need_dis = self.tag in ("minimal", "minimal_decohering")
        need_noise = self.tag == "minimal_decohering"
        for name, needed in (("trajectories", need_traj), ("disorder", need_dis), ("noise", need_noise)):
            present = getattr(self, name) is not None
            if present != needed:
                verb = "requires" if needed else "does not take"
                raise VariantError(f"model {self.tag!r} {verb} {name}")
        if self.disorder is not None and self.disorder.n_sites != self.n_sites:
            raise VariantError("disorder realization has the wrong number of sites")
        if self.noise is not None and self.noise.gamma.shape[1] != self.n_sites:
            raise VariantError("noise trajectory has the wrong number of sites")
        if self.detuning_offsets is not None:
            off = np.asarray(self.detuning_offsets, dtype=float)
            if off.shape != (self.n_sites,):
                raise VariantError("detuning offsets need one entry per site")
            object.__setattr__(self, "detuning_offsets", off)


def hamiltonian_at(t: float, protocol: QuenchProtocol, variant: ModelVariant,
                   geom: LatticeGeometry | None = None,
                   const: PhysicalConstants = DEFAULT_CONSTANTS,
                   step: int | None = None) -> HamiltonianTerms:
    """Instantaneous couplings and fields at time ``t``.

    ``step`` selects the noise row; it defaults to ``floor(t / dt)``.
    """
    if not -1e-12 <= t <= protocol.total_time + 1e-12:
        raise ValueError(f"t={t} outside [0, {protocol.total_time}]")
    L = variant.n_sites
    shot = variant.shot or ShotFluctuation()
    omega = protocol.omega_at(t) + shot.delta_omega * protocol.ramp_fraction(t)
    delta = protocol.delta_at(t) + shot.delta_detuning
    offsets = np.zeros(L) if variant.detuning_offsets is None else variant.detuning_offsets
    h_z = (delta - delta_ising(variant.a, const)) / 2.0 + offsets / 2.0

    if variant.tag == "ideal":
        if geom is None:
            terms = uniform_chain_terms(L, variant.a, const, variant.boundary, variant.nnn)
        else:
            terms = couplings_from_positions(geom, const)
    elif variant.tag == "motion":
        if geom is None:
            raise VariantError("the motion model needs a lattice geometry")
        reference = couplings_from_positions(geom, const)
        terms = couplings_from_positions(geom, const, variant.trajectories.positions_at(max(t, 0.0)))
        # only the motion-induced change of the local Ising shift survives at Δ_ising
        h_z = h_z + reference.local_ising_shift() - terms.local_ising_shift()
    else:
        dis = variant.disorder
        nn = bond_pairs(L, 1, dis.boundary)
        terms = HamiltonianTerms(L, nn, dis.j_r, np.zeros((0, 2), np.int64), np.zeros(0))
        h_z = h_z + dis.h_r
        if variant.noise is not None:
            k = int(np.floor(t / protocol.dt)) if step is None else step
            h_z = h_z + variant.noise.row(k)
    if terms.n_sites != L:
        raise VariantError("geometry size does not match the variant")
    return terms.with_fields(omega / 2.0, h_z, offsets)


def step(state, terms: HamiltonianTerms, dt: float, tol: float = 1e-12) -> SpinState:
    """One step exp(-i H dt)|ψ⟩ with H held constant over the step."""
    psi = state if isinstance(state, SpinState) else SpinState(state)
    psi.check_normalized()
    if psi.L != terms.n_sites:
        raise ValueError("state and Hamiltonian sizes differ")
    op = DiagonalPlusField.from_terms(terms)
    return SpinState(expm_krylov(op, psi.amplitudes, dt, tol))


def dense_hamiltonian(terms: HamiltonianTerms) -> np.ndarray:
    return DiagonalPlusField.from_terms(terms).dense()


def expectation_energy(state, terms: HamiltonianTerms) -> float:
    amp = amplitudes_of(state)
    op = DiagonalPlusField.from_terms(terms)
    return float(np.vdot(amp, op.matvec(amp)).real)


def exact_spectrum(terms: HamiltonianTerms, max_sites: int = SPECTRUM_MAX_L) -> np.ndarray:
    """All 2^L eigenvalues in ascending order (rad/µs)."""
    check_size(terms.n_sites, max_sites)
    H = dense_hamiltonian(terms)
    return linalg.eigh(H, eigvals_only=True, overwrite_a=True, check_finite=False)

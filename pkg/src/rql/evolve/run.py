"""Ensembles of quench trajectories and their reduction to mean ± sem."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .. import observables as obs
from ..constants import DEFAULT_CONSTANTS, PhysicalConstants
from ..disorder import (
    SiteDetuningProfile,
    derive_seed,
    sample_minimal_model,
    sample_noise_trajectory,
    sample_shot_fluctuation,
)
from ..geometry import Boundary, LatticeGeometry
from ..hamiltonian import QuenchProtocol
from ..motion import sample_trajectories
from .kernel import DiagonalPlusField, check_size, expm_krylov
from .model import ModelVariant, hamiltonian_at
from .state import SpinState

log = logging.getLogger(__name__)

SCALAR_OBSERVABLES = ("magnetization", "domain_wall", "qfi_density", "entropy")
ALL_OBSERVABLES = SCALAR_OBSERVABLES + ("correlators", "qfi_density_pooled")
UNITS = {"entropy": "nats"}

# substream keys inside one realization
_DISORDER, _NOISE, _MOTION, _SHOT = 1, 2, 3, 4


@dataclass(frozen=True, eq=False)
class EnsembleSpec:
    """Recipe for drawing the realizations of one model variant."""

    tag: str = "ideal"
    n_sites: int = 12
    a: float = 9.0
    boundary: Boundary = "periodic"
    geometry: LatticeGeometry | None = None
    delta_r: float = 0.1
    temperature: float = 15e-6
    sigma_gamma: float = 0.6
    white_noise: bool = False
    detuning_profile: SiteDetuningProfile | None = None
    shot_sigma_omega: float = 0.0
    shot_sigma_detuning: float = 0.0
    nnn: bool = True
    const: PhysicalConstants = DEFAULT_CONSTANTS

    def __post_init__(self):
        if self.geometry is not None and self.geometry.n_sites != self.n_sites:
            raise ValueError("geometry size does not match n_sites")
        if self.tag == "motion" and self.geometry is None:
            raise ValueError("the motion model needs a geometry")

    def realization(self, k: int, master_seed: int, protocol: QuenchProtocol) -> ModelVariant:
        seed = derive_seed(master_seed, k)
        L = self.n_sites
        kw = {}
        if self.tag == "motion":
            kw["trajectories"] = sample_trajectories(
                self.geometry, self.delta_r, self.temperature, self.const, derive_seed(seed, _MOTION))
        if self.tag in ("minimal", "minimal_decohering"):
            kw["disorder"] = sample_minimal_model(
                L, self.a, self.delta_r, self.const, derive_seed(seed, _DISORDER), self.boundary)
        if self.tag == "minimal_decohering":
            kw["noise"] = sample_noise_trajectory(
                L, protocol.n_steps, self.sigma_gamma, derive_seed(seed, _NOISE),
                protocol.dt if self.white_noise else None)
        if self.shot_sigma_omega or self.shot_sigma_detuning:
            kw["shot"] = sample_shot_fluctuation(
                self.shot_sigma_omega, self.shot_sigma_detuning, derive_seed(seed, _SHOT))
        if self.detuning_profile is not None:
            kw["detuning_offsets"] = self.detuning_profile.evaluate(L)
        return ModelVariant(self.tag, L, self.a, self.boundary, nnn=self.nnn, **kw)


@dataclass
class EvolutionResult:
    times: np.ndarray
    series: dict[str, obs.ObservableSeries]
    per_realization: dict[str, np.ndarray]
    seeds: list[int]
    master_seed: int
    correlators: obs.CorrelatorMatrix | None = None
    correlators_sem: np.ndarray | None = None
    states: dict[int, list[np.ndarray]] = field(default_factory=dict)

    @property
    def n_realizations(self) -> int:
        return len(self.seeds)

    def __getitem__(self, name: str) -> obs.ObservableSeries:
        return self.series[name]

    def series_csv(self, name: str) -> str:
        s = self.series[name]
        unit = UNITS.get(name)
        cols = ["mean", "sem"] if not unit else [f"mean_{unit}", f"sem_{unit}"]
        lines = [",".join(["time_us"] + cols)]
        for t, m, e in zip(s.times, s.mean, s.sem):
            lines.append(f"{obs.fmt(t)},{obs.fmt(m)},{obs.fmt(e)}")
        return "\n".join(lines) + "\n"


def ensemble_mean_sem(stack: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mean and sample-std/√n over axis 0, with compensated sums."""
    stack = np.asarray(stack, dtype=float)
    n = stack.shape[0]
    flat = stack.reshape(n, -1)
    mean = np.array([math.fsum(col) / n for col in flat.T])
    if n > 1:
        var = np.array([math.fsum((col - m) ** 2) / (n - 1) for col, m in zip(flat.T, mean)])
        sem = np.sqrt(var / n)
    else:
        sem = np.zeros_like(mean)
    shape = stack.shape[1:]
    return mean.reshape(shape), sem.reshape(shape)


def record_indices(n_steps: int, stride: int) -> np.ndarray:
    if stride < 1:
        raise ValueError("stride must be >= 1")
    idx = list(range(0, n_steps + 1, stride))
    if idx[-1] != n_steps:
        idx.append(n_steps)
    return np.array(idx)


def _measure(psi: np.ndarray, names, cut) -> dict:
    out = {}
    if "magnetization" in names:
        out["magnetization"] = obs.magnetization(psi)
    if "domain_wall" in names:
        out["domain_wall"] = obs.domain_wall_density(psi)
    if "qfi_density" in names:
        out["qfi_density"] = obs.qfi_density(psi)
    if "qfi_density_pooled" in names:
        out["moments"] = obs.magnetization_moments(psi)
    if "entropy" in names:
        out["entropy"] = obs.entanglement_entropy(psi, cut)
    if "correlators" in names:
        out["correlators"] = obs.correlator_profile(psi)
    return out


def evolve_variant(protocol: QuenchProtocol, variant: ModelVariant, geom: LatticeGeometry | None = None,
                   const: PhysicalConstants = DEFAULT_CONSTANTS, observables=("magnetization",),
                   stride: int = 1, initial_state: SpinState | None = None, cut=None,
                   store_at=(), tol: float = 1e-12, merge_constant: bool = True):
    """Evolve one realization and record observables at ``record_indices``.

    With ``merge_constant`` consecutive steps that share the same Hamiltonian
    between two recording points are propagated in one Krylov call.
    """
    L = variant.n_sites
    check_size(L)
    psi = (initial_state or SpinState.all_down(L)).amplitudes.copy()
    rec = set(record_indices(protocol.n_steps, stride).tolist())
    records, stored = [], {}
    op, key, pending = None, None, 0.0

    def flush():
        nonlocal psi, pending
        if pending:
            psi = expm_krylov(op, psi, pending, tol)
            pending = 0.0

    for k in range(protocol.n_steps + 1):
        if k in rec:
            flush()
            records.append(_measure(psi, observables, cut))
            if k in store_at:
                stored[k] = psi.copy()
        if k == protocol.n_steps:
            break
        dt = protocol.dt
        t_a, t_b = (k + _CF4_NODES[0]) * dt, (k + _CF4_NODES[1]) * dt
        terms_a = hamiltonian_at(t_a, protocol, variant, geom, const, step=k)
        terms_b = hamiltonian_at(t_b, protocol, variant, geom, const, step=k)
        key_a, key_b = _terms_key(terms_a), _terms_key(terms_b)
        if key_a != key_b:
            # H varies inside the step: fourth-order commutator-free Magnus
            flush()
            op_a, op_b = DiagonalPlusField.from_terms(terms_a), DiagonalPlusField.from_terms(terms_b)
            for wa, wb in (_CF4_WEIGHTS[::-1], _CF4_WEIGHTS):
                mixed = DiagonalPlusField(L, 2 * (wa * op_a.diag + wb * op_b.diag),
                                          2 * (wa * op_a.h_x + wb * op_b.h_x))
                psi = expm_krylov(mixed, psi, dt / 2, tol)
            op, key = None, None
            continue
        if key_a != key:
            flush()
            op, key = DiagonalPlusField.from_terms(terms_a), key_a
        pending += dt
        if not merge_constant:
            flush()
    return records, stored


_CF4_NODES = (0.5 - math.sqrt(3) / 6, 0.5 + math.sqrt(3) / 6)
_CF4_WEIGHTS = ((3 - 2 * math.sqrt(3)) / 12, (3 + 2 * math.sqrt(3)) / 12)


def _terms_key(terms):
    return (terms.h_x, terms.couplings.tobytes(), terms.h_z.tobytes())


def run_quench(protocol: QuenchProtocol, spec: EnsembleSpec, n_realizations: int = 1,
               observables=("magnetization", "domain_wall"), master_seed: int = 0, stride: int = 1,
               initial_state: SpinState | None = None, entropy_cut=None, store_at_steps=(),
               threads: int = 1, merge_constant: bool = True) -> EvolutionResult:
    """Evolve ``n_realizations`` independent draws of ``spec`` from |↓…↓⟩."""
    if n_realizations < 1:
        raise ValueError("n_realizations must be >= 1")
    unknown = set(observables) - set(ALL_OBSERVABLES)
    if unknown:
        raise ValueError(f"unknown observables {sorted(unknown)}")
    check_size(spec.n_sites)
    idx = record_indices(protocol.n_steps, stride)
    times = idx * protocol.dt
    seeds = [derive_seed(master_seed, k) for k in range(n_realizations)]

    def work(k):
        variant = spec.realization(k, master_seed, protocol)
        out = evolve_variant(protocol, variant, spec.geometry, spec.const, observables, stride,
                             initial_state, entropy_cut, set(store_at_steps), merge_constant=merge_constant)
        log.debug("realization %d done", k)
        return out

    if threads > 1 and n_realizations > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, range(n_realizations)))
    else:
        results = [work(k) for k in range(n_realizations)]

    per, series = {}, {}
    names = [n for n in observables if n in SCALAR_OBSERVABLES]
    for name in names:
        per[name] = np.array([[r[name] for r in recs] for recs, _ in results])
        mean, sem = ensemble_mean_sem(per[name])
        series[name] = obs.ObservableSeries(times, mean, sem, name, UNITS.get(name, ""))
    if "qfi_density_pooled" in observables:
        mom = np.array([[r["moments"] for r in recs] for recs, _ in results])  # (R, T, 2)
        per["moments"] = mom
        m1, _ = ensemble_mean_sem(mom[..., 0])
        m2, _ = ensemble_mean_sem(mom[..., 1])
        L = spec.n_sites
        pooled = L * np.maximum(m2 - m1**2, 0.0)
        series["qfi_density_pooled"] = obs.ObservableSeries(times, pooled, np.zeros_like(pooled),
                                                            "qfi_density_pooled")
    corr = corr_sem = None
    if "correlators" in observables:
        per["correlators"] = np.array([[r["correlators"] for r in recs] for recs, _ in results])
        mean, corr_sem = ensemble_mean_sem(per["correlators"])
        corr = obs.CorrelatorMatrix(times, mean)
    states = {}
    for k in store_at_steps:
        states[int(k)] = [stored[k] for _, stored in results]
    return EvolutionResult(times, series, per, seeds, int(master_seed), corr, corr_sem, states)

"""Random ingredients of the motion-induced disorder models.

Covers the minimal random spin model, the classical dephasing noise, global
shot-to-shot pulse fluctuations and the static site-detuning profile.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .constants import DEFAULT_CONSTANTS, PhysicalConstants
from .geometry import Boundary

UINT64_MASK = (1 << 64) - 1


def derive_seed(master_seed: int, *keys: int) -> int:
    """Deterministic 64-bit substream seed for ``(master_seed, *keys)``.

    Realization ``k`` of an ensemble uses ``derive_seed(master, k)``; streams
    inside a realization add a further key.
    """
    words = [int(master_seed) & UINT64_MASK] + [int(k) & UINT64_MASK for k in keys]
    ss = np.random.SeedSequence(words)
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def mean_coupling(a: float, const: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    return const.c6 / (4.0 * a**6)


def coupling_spread(a: float, delta_r: float, const: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """Std of the random couplings, (3/2) C6 δr / a⁷."""
    return 1.5 * const.c6 * delta_r / a**7


def field_spread(a: float, delta_r: float, const: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """Std of the random longitudinal fields, 3 C6 δr / a⁷."""
    return 3.0 * const.c6 * delta_r / a**7


def disorder_strength(a: float, delta_r: float, const: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    """σ(h_r) / μ(J_r); reduces to 12 δr / a."""
    if not a > 0:
        raise ValueError("lattice constant must be positive")
    return field_spread(a, delta_r, const) / mean_coupling(a, const)


@dataclass(frozen=True, eq=False)
class DisorderRealization:
    j_r: np.ndarray
    h_r: np.ndarray
    seed: int
    a: float
    delta_r: float
    boundary: Boundary = "periodic"

    @property
    def n_sites(self) -> int:
        return len(self.h_r)

    def to_json(self) -> str:
        return json.dumps({
            "j_r_rad_per_us": np.asarray(self.j_r).tolist(),
            "h_r_rad_per_us": np.asarray(self.h_r).tolist(),
            "seed": self.seed,
            "lattice_constant_um": self.a,
            "delta_r_um": self.delta_r,
            "boundary": self.boundary,
        })

    @classmethod
    def from_json(cls, text: str) -> "DisorderRealization":
        d = json.loads(text)
        return cls(np.array(d["j_r_rad_per_us"]), np.array(d["h_r_rad_per_us"]), int(d["seed"]),
                   float(d["lattice_constant_um"]), float(d["delta_r_um"]), d.get("boundary", "periodic"))


def sample_minimal_model(L: int, a: float, delta_r: float,
                         const: PhysicalConstants = DEFAULT_CONSTANTS, seed: int = 0,
                         boundary: Boundary = "periodic") -> DisorderRealization:
    """Draw i.i.d. bond couplings and site fields of the minimal model."""
    if L < 2 or not a > 0 or delta_r < 0:
        raise ValueError("need L >= 2, a > 0 and delta_r >= 0")
    n_bonds = L if boundary == "periodic" else L - 1
    rng = np.random.default_rng(seed)
    j_r = mean_coupling(a, const) + coupling_spread(a, delta_r, const) * rng.standard_normal(n_bonds)
    h_r = field_spread(a, delta_r, const) * rng.standard_normal(L)
    return DisorderRealization(j_r, h_r, int(seed), float(a), float(delta_r), boundary)


def noise_sigma(value_mhz: float, angular: bool = False) -> float:
    """Interpret a noise amplitude quoted in MHz as rad/µs.

    With ``angular=False`` the number is used as is; ``angular=True`` applies
    the 2π factor.
    """
    return 2 * np.pi * value_mhz if angular else float(value_mhz)


@dataclass(frozen=True, eq=False)
class NoiseTrajectory:
    """Per-step, per-site longitudinal-field noise in rad/µs."""

    gamma: np.ndarray
    sigma_gamma: float
    seed: int

    @property
    def n_steps(self) -> int:
        return self.gamma.shape[0]

    def row(self, step: int) -> np.ndarray:
        return self.gamma[min(max(step, 0), self.n_steps - 1)]


def sample_noise_trajectory(L: int, n_steps: int, sigma_gamma: float, seed: int = 0,
                            white_noise_dt: float | None = None) -> NoiseTrajectory:
    """Gaussian noise redrawn at every integration step.

    By default the per-step std is ``sigma_gamma`` regardless of the step.
    Passing ``white_noise_dt`` rescales it to ``sigma_gamma / sqrt(dt)``.
    """
    if sigma_gamma < 0:
        raise ValueError("sigma_gamma must be non-negative")
    std = sigma_gamma if white_noise_dt is None else sigma_gamma / np.sqrt(white_noise_dt)
    rng = np.random.default_rng(seed)
    gamma = std * rng.standard_normal((n_steps, L))
    return NoiseTrajectory(gamma, float(sigma_gamma), int(seed))


@dataclass(frozen=True)
class ShotFluctuation:
    """Global Ω and Δ offsets of one experimental shot (rad/µs)."""

    delta_omega: float = 0.0
    delta_detuning: float = 0.0


def sample_shot_fluctuation(sigma_omega: float, sigma_detuning: float, seed: int = 0) -> ShotFluctuation:
    rng = np.random.default_rng(seed)
    d_om, d_det = rng.standard_normal(2)
    return ShotFluctuation(float(sigma_omega * d_om), float(sigma_detuning * d_det))


@dataclass(frozen=True)
class SiteDetuningProfile:
    """Sinusoidal detuning offset over the perimeter index (rad/µs)."""

    amplitude: float
    period: float
    phase: float = 0.0

    def __post_init__(self):
        if not self.period > 0:
            raise ValueError("period must be positive")

    def evaluate(self, L: int) -> np.ndarray:
        i = np.arange(L)
        return self.amplitude * np.sin(2 * np.pi * i / self.period + self.phase)

    @classmethod
    def fit(cls, offsets, period: float) -> "SiteDetuningProfile":
        """Least-squares sinusoid of fixed period through measured offsets."""
        y = np.asarray(offsets, dtype=float)
        i = np.arange(len(y))
        ok = np.isfinite(y)
        arg = 2 * np.pi * i[ok] / period
        A = np.stack([np.sin(arg), np.cos(arg)], axis=1)
        (s, c), *_ = np.linalg.lstsq(A, y[ok], rcond=None)
        return cls(float(np.hypot(s, c)), period, float(np.arctan2(c, s)))


def sinusoidal_profile(L: int, amplitude: float, period: float, phase: float = 0.0) -> np.ndarray:
    return SiteDetuningProfile(amplitude, period, phase).evaluate(L)

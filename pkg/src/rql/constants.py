"""Physical constants and unit conventions.

Internal units are rad/µs for angular frequencies, µm for lengths, µs for
times, K for temperatures and kg for masses.
"""
from __future__ import annotations

from dataclasses import dataclass

#: m^6 -> µm^6 and rad/s -> rad/µs
_SI_TO_INTERNAL_C6 = 1e36 * 1e-6

HBAR = 1.054571817e-34  # J s
K_B = 1.380649e-23  # J/K
RB87_MASS = 1.443e-25  # kg

C6_SI = 5.42e-24  # rad Hz m^6


def c6_to_internal(c6_rad_hz_m6: float) -> float:
    """Convert a C6 coefficient from rad·Hz·m⁶ to rad·µm⁶/µs."""
    return c6_rad_hz_m6 * _SI_TO_INTERNAL_C6


def c6_to_si(c6_internal: float) -> float:
    """Inverse of :func:`c6_to_internal`."""
    return c6_internal / _SI_TO_INTERNAL_C6


@dataclass(frozen=True)
class PhysicalConstants:
    c6: float = c6_to_internal(C6_SI)
    k_b: float = K_B
    atom_mass: float = RB87_MASS
    default_temperature: float = 15e-6
    default_delta_r: float = 0.1
    hbar: float = HBAR

    def __post_init__(self):
        for name in ("c6", "k_b", "atom_mass", "default_temperature", "default_delta_r", "hbar"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")

    @property
    def c6_si(self) -> float:
        """C6 in rad·Hz·m⁶."""
        return c6_to_si(self.c6)

    @property
    def thermal_velocity_std(self) -> float:
        """Per-axis Maxwell-Boltzmann velocity std at the default temperature, in µm/µs."""
        # m/s and µm/µs coincide numerically
        return (self.k_b * self.default_temperature / self.atom_mass) ** 0.5


DEFAULT_CONSTANTS = PhysicalConstants()

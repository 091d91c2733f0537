from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NORM_TOL = 1e-10


class NormalizationError(ValueError):
    """A state handed to a unitary step is not normalized."""


@dataclass(eq=False)
class SpinState:
    """Complex amplitudes over the 2^L computational basis states."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=np.complex128).ravel()
        L = int(round(np.log2(len(amp)))) if len(amp) else -1
        if L < 0 or 2**L != len(amp):
            raise ValueError("amplitude vector length must be a power of two")
        self.amplitudes = amp

    @property
    def L(self) -> int:
        return int(round(np.log2(len(self.amplitudes))))

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def check_normalized(self, tol: float = NORM_TOL) -> None:
        if abs(self.norm() - 1.0) > tol:
            raise NormalizationError(f"state norm {self.norm():.3e} differs from 1")

    @classmethod
    def basis(cls, bits) -> "SpinState":
        bits = [int(b) for b in bits]
        idx = int("".join(map(str, bits)), 2) if bits else 0
        amp = np.zeros(2 ** len(bits), dtype=np.complex128)
        amp[idx] = 1.0
        return cls(amp)

    @classmethod
    def all_down(cls, L: int) -> "SpinState":
        return cls.basis([0] * L)

    @classmethod
    def all_up(cls, L: int) -> "SpinState":
        return cls.basis([1] * L)

    @classmethod
    def product(cls, site_states) -> "SpinState":
        """Tensor product of single-site amplitude pairs ``(c_down, c_up)``."""
        amp = np.ones(1, dtype=np.complex128)
        for c in site_states:
            amp = np.kron(amp, np.asarray(c, dtype=np.complex128))
        amp /= np.linalg.norm(amp)
        return cls(amp)

    @classmethod
    def ghz(cls, L: int) -> "SpinState":
        amp = np.zeros(2**L, dtype=np.complex128)
        amp[0] = amp[-1] = 2**-0.5
        return cls(amp)


def amplitudes_of(state) -> np.ndarray:
    if isinstance(state, SpinState):
        return state.amplitudes
    return np.asarray(state, dtype=np.complex128).ravel()

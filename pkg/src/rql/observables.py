"""Observables of quench dynamics and of spectra.

State observables accept a :class:`~rql.evolve.state.SpinState` or a raw
amplitude vector. All σᶻ observables reduce to moments of the computational
basis distribution |ψ_s|².
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import signal, stats

from .evolve.kernel import z_table
from .evolve.state import amplitudes_of

DEGENERACY_TOL = 1e-12
SCHMIDT_CUTOFF = 1e-14

_trapezoid = getattr(np, "trapezoid", None) or np.trapz


class ObservableError(ValueError):
    pass


@lru_cache(maxsize=4)
def _zf(L: int) -> np.ndarray:
    z = z_table(L).astype(np.float64)
    z.setflags(write=False)
    return z


def _probs(state) -> tuple[np.ndarray, int]:
    amp = amplitudes_of(state)
    L = int(round(np.log2(len(amp))))
    return (amp.real**2 + amp.imag**2), L


def site_magnetizations(state) -> np.ndarray:
    p, L = _probs(state)
    return _zf(L) @ p


def zz_matrix(state) -> np.ndarray:
    """⟨σᶻ_i σᶻ_j⟩ for all site pairs."""
    p, L = _probs(state)
    z = _zf(L)
    return (z * p) @ z.T


def magnetization(state) -> float:
    return float(site_magnetizations(state).mean())


def domain_wall_density(state, periodic: bool = True) -> float:
    zz = zz_matrix(state)
    L = len(zz)
    i = np.arange(L if periodic else L - 1)
    return float(zz[i, (i + 1) % L].mean())


def _connected_from(zz: np.ndarray, z: np.ndarray, r: int) -> float:
    L = len(z)
    i = np.arange(L)
    j = (i + r) % L
    return float(np.mean(zz[i, j] - z[i] * z[j]))


def connected_correlator(state, r: int) -> float:
    """Site-averaged ⟨σᶻ_i σᶻ_{i+r}⟩ − ⟨σᶻ_i⟩⟨σᶻ_{i+r}⟩ on the ring."""
    p, L = _probs(state)
    if not 1 <= r <= L // 2:
        raise ObservableError(f"distance {r} outside 1..{L // 2}")
    return _connected_from(zz_matrix(state), site_magnetizations(state), r)


def correlator_profile(state) -> np.ndarray:
    """Connected correlators for r = 1 … ⌊L/2⌋."""
    zz = zz_matrix(state)
    z = site_magnetizations(state)
    return np.array([_connected_from(zz, z, r) for r in range(1, len(z) // 2 + 1)])


@lru_cache(maxsize=4)
def _total_z(L: int) -> np.ndarray:
    m = _zf(L).sum(axis=0)
    m.setflags(write=False)
    return m


def qfi_density(state) -> float:
    """L · Var(𝕄) with 𝕄 the site-averaged σᶻ."""
    p, L = _probs(state)
    m = _total_z(L) / L
    mean = p @ m
    return float(L * max(p @ (m * m) - mean * mean, 0.0))


def magnetization_moments(state) -> tuple[float, float]:
    """(⟨𝕄⟩, ⟨𝕄²⟩), used for the pooled ensemble QFI."""
    p, L = _probs(state)
    m = _total_z(L) / L
    return float(p @ m), float(p @ (m * m))


def default_cut(L: int, offset: int = 0) -> tuple[int, int]:
    return offset % L, (offset + L // 2) % L


def _arc(cut: tuple[int, int], L: int) -> list[int]:
    start, stop = (int(c) for c in cut)
    if not (0 <= start < L and 0 <= stop < L) or start == stop:
        raise ObservableError(f"cut {cut} does not split a ring of {L} sites into two arcs")
    n = (stop - start) % L
    return [(start + k) % L for k in range(n)]


def schmidt_values(state, cut: tuple[int, int] | None = None) -> np.ndarray:
    amp = amplitudes_of(state)
    L = int(round(np.log2(len(amp))))
    arc = _arc(default_cut(L) if cut is None else cut, L)
    rest = [i for i in range(L) if i not in arc]
    psi = amp.reshape((2,) * L).transpose(arc + rest).reshape(2 ** len(arc), -1)
    return np.linalg.svd(psi, compute_uv=False)


def entanglement_entropy(state, cut: tuple[int, int] | None = None) -> float:
    """Von Neumann entropy (nats) of the arc from ``cut[0]`` up to ``cut[1]``."""
    s = schmidt_values(state, cut)
    s = s[s > SCHMIDT_CUTOFF]
    lam = s**2
    lam = lam / lam.sum()
    return float(-np.sum(lam * np.log(lam)))


def time_average(times, values, window: tuple[float, float] | None = None,
                 absolute: bool = False) -> float:
    """Trapezoidal mean of a sampled series over ``window``."""
    t = np.asarray(times, dtype=float)
    y = np.asarray(values, dtype=float)
    if absolute:
        y = np.abs(y)
    t0, t1 = (t[0], t[-1]) if window is None else window
    if not t1 > t0:
        raise ObservableError("empty averaging window")
    if t0 < t[0] - 1e-12 or t1 > t[-1] + 1e-12:
        raise ObservableError("window outside the sampled range")
    inside = (t > t0) & (t < t1)
    tt = np.concatenate([[t0], t[inside], [t1]])
    yy = np.concatenate([[np.interp(t0, t, y)], y[inside], [np.interp(t1, t, y)]])
    return float(_trapezoid(yy, tt) / (t1 - t0))


def merge_degenerate(eigs, tol: float = DEGENERACY_TOL) -> np.ndarray:
    e = np.sort(np.asarray(eigs, dtype=float))
    if len(e) == 0:
        return e
    keep = np.concatenate([[True], np.diff(e) > tol])
    return e[keep]


def gap_ratios(eigs, tol: float = DEGENERACY_TOL) -> np.ndarray:
    e = merge_degenerate(eigs, tol)
    if len(e) < 3:
        raise ObservableError("need at least three distinct levels")
    gaps = np.diff(e)
    return np.minimum(gaps[1:], gaps[:-1]) / np.maximum(gaps[1:], gaps[:-1])


def level_spacing_ratio(eigs, tol: float = DEGENERACY_TOL, fraction: float = 1.0) -> float:
    """Mean adjacent gap ratio ⟨r⟩.

    ``fraction`` < 1 keeps only the central part of the merged spectrum.
    """
    r = gap_ratios(eigs, tol)
    if fraction < 1.0:
        n = len(r)
        drop = int(round(n * (1 - fraction) / 2))
        r = r[drop:n - drop]
    return float(r.mean())


def density_of_states(eigs, n_bins: int, range_: tuple[float, float] | None = None):
    """Normalized histogram of the spectrum, returns ``(density, edges)``."""
    if n_bins < 1:
        raise ObservableError("n_bins must be positive")
    e = np.asarray(eigs, dtype=float)
    lo, hi = (e.min(), e.max()) if range_ is None else range_
    return np.histogram(e, bins=n_bins, range=(lo, hi) if hi > lo else None, density=True)


def count_minibands(density, prominence: float = 0.1) -> int:
    """Number of histogram peaks with prominence above ``prominence`` × max."""
    d = np.concatenate([[0.0], np.asarray(density, dtype=float), [0.0]])
    peaks, _ = signal.find_peaks(d, prominence=prominence * d.max())
    return len(peaks)


def excess_kurtosis(eigs) -> float:
    return float(stats.kurtosis(np.asarray(eigs, dtype=float), fisher=True))


@dataclass
class ObservableSeries:
    times: np.ndarray
    mean: np.ndarray
    sem: np.ndarray
    label: str
    unit: str = ""

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.mean = np.asarray(self.mean, dtype=float)
        self.sem = np.asarray(self.sem, dtype=float)
        if not len(self.times) == len(self.mean) == len(self.sem):
            raise ValueError("series fields must have equal lengths")
        if np.any(self.sem < 0):
            raise ValueError("sem must be non-negative")

    def time_average(self, window=None, absolute=False) -> float:
        return time_average(self.times, self.mean, window, absolute)

    def at(self, t: float) -> float:
        return float(np.interp(t, self.times, self.mean))


@dataclass
class CorrelatorMatrix:
    """Connected correlators indexed by ``[time, r - 1]``."""

    times: np.ndarray
    values: np.ndarray
    distances: np.ndarray = field(default=None)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if self.distances is None:
            self.distances = np.arange(1, self.values.shape[1] + 1)
        self.distances = np.asarray(self.distances, dtype=int)
        if self.values.shape != (len(self.times), len(self.distances)):
            raise ValueError("values must be shaped (n_times, n_distances)")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time_us"] + [f"r{d}_sites" for d in self.distances])
        for t, row in zip(self.times, self.values):
            w.writerow([fmt(t)] + [fmt(v) for v in row])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "CorrelatorMatrix":
        rows = list(csv.reader(io.StringIO(text)))
        header, body = rows[0], [r for r in rows[1:] if r]
        distances = [int(h[1:].split("_")[0]) for h in header[1:]]
        data = np.array([[float(x) for x in r] for r in body])
        return cls(data[:, 0], data[:, 1:], np.array(distances))


def fmt(x: float) -> str:
    """Decimal with 12 significant digits."""
    return f"{float(x):.12g}"

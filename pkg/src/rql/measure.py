"""Projective measurement, readout errors, post-selection and mitigation.

Bits follow the spin convention: ``1`` is the Rydberg state (σᶻ = +1), ``0``
the ground state (σᶻ = −1). Readout errors are independent per site, so the
two-site confusion matrix is the Kronecker square of the one-site matrix and
all closed-form mitigations below are exact inverses of that channel.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from .disorder import derive_seed
from .evolve.kernel import z_table
from .evolve.state import amplitudes_of

_SAMPLE, _PREP = 1, 2

# per-atom loading failure that reproduces ≈160 of 200 shots kept at 28 atoms
PAPER_PREP_FAILURE = 0.008


class MeasurementError(ValueError):
    pass


class EmptyRecordError(MeasurementError):
    """Post-selection left no shots."""


class SingularModelError(MeasurementError):
    """The readout channel is not invertible."""


class ShotFormatError(MeasurementError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class ReadoutModel:
    """Independent per-site misclassification probabilities."""

    p01: float = 0.01  # ground read as Rydberg
    p10: float = 0.05  # Rydberg read as ground

    def __post_init__(self):
        for name in ("p01", "p10"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise MeasurementError(f"{name} must lie in [0, 1], got {p}")

    @property
    def p00(self) -> float:
        return 1.0 - self.p01

    @property
    def p11(self) -> float:
        return 1.0 - self.p10

    @property
    def invertible(self) -> bool:
        return abs(1.0 - self.p01 - self.p10) > 1e-15

    def require_invertible(self):
        if not self.invertible:
            raise SingularModelError("p01 + p10 = 1 makes the confusion matrix singular")

    def to_dict(self) -> dict:
        return {"p01": self.p01, "p10": self.p10}


IDENTITY_READOUT = ReadoutModel(0.0, 0.0)
AQUILA_READOUT = ReadoutModel()


@dataclass(eq=False)
class ShotRecord:
    """Measured bitstrings, one row per shot, with preparation flags."""

    bits: np.ndarray
    prep_ok: np.ndarray | None = None
    seed: int | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        b = np.asarray(self.bits)
        if b.ndim != 2:
            raise MeasurementError("bits must be a (shots, sites) matrix")
        if b.size and not np.all((b == 0) | (b == 1)):
            raise MeasurementError("bits must be 0 or 1")
        self.bits = b.astype(np.uint8)
        ok = np.ones(len(b), dtype=bool) if self.prep_ok is None else np.asarray(self.prep_ok, dtype=bool)
        if ok.shape != (len(b),):
            raise MeasurementError("prep_ok must have one flag per shot")
        self.prep_ok = ok

    @property
    def n_shots(self) -> int:
        return self.bits.shape[0]

    @property
    def n_sites(self) -> int:
        return self.bits.shape[1]

    def spins(self) -> np.ndarray:
        """σᶻ values (±1) as floats."""
        return 2.0 * self.bits - 1.0

    def to_csv(self, include_prep: bool = False) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        header = [f"site_{i}" for i in range(self.n_sites)]
        w.writerow(header + (["prep_ok"] if include_prep else []))
        for row, ok in zip(self.bits, self.prep_ok):
            w.writerow([int(b) for b in row] + ([int(ok)] if include_prep else []))
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "ShotRecord":
        """Parse the site_0 … site_{L−1} format; a ``prep_ok`` column is optional."""
        rows = list(csv.reader(io.StringIO(text)))
        if not rows:
            raise ShotFormatError("empty shot file", 1)
        header = [h.strip() for h in rows[0]]
        prep_col = header.index("prep_ok") if "prep_ok" in header else None
        site_cols = [c for c in header if c != "prep_ok"]
        if not site_cols or site_cols != [f"site_{i}" for i in range(len(site_cols))]:
            raise ShotFormatError("header must be site_0 ... site_{L-1}", 1)
        bits, ok = [], []
        for n, row in enumerate(rows[1:], start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise ShotFormatError(f"expected {len(header)} columns, got {len(row)}", n)
            vals = []
            for c in row:
                c = c.strip()
                if c not in ("0", "1"):
                    raise ShotFormatError(f"entry {c!r} is not 0 or 1", n)
                vals.append(int(c))
            if prep_col is not None:
                ok.append(bool(vals.pop(prep_col)))
            bits.append(vals)
        if not bits:
            raise ShotFormatError("shot file has no data rows", len(rows))
        return cls(np.array(bits, dtype=np.uint8), np.array(ok) if prep_col is not None else None)

    def to_json(self) -> str:
        return json.dumps({
            "n_sites": self.n_sites,
            "seed": self.seed,
            "metadata": self.metadata,
            "prep_ok": [bool(x) for x in self.prep_ok],
            "bits": ["".join(map(str, row)) for row in self.bits],
        })

    @classmethod
    def from_json(cls, text: str) -> "ShotRecord":
        d = json.loads(text)
        L = int(d["n_sites"])
        rows = d["bits"]
        if any(len(s) != L for s in rows):
            raise ShotFormatError("bitstring length differs from n_sites")
        bits = np.array([[int(c) for c in s] for s in rows], dtype=np.uint8).reshape(len(rows), L)
        return cls(bits, d.get("prep_ok"), d.get("seed"), d.get("metadata", {}))


def index_to_bits(idx, L: int) -> np.ndarray:
    """Basis indices to bit rows; site i is bit L−1−i of the index."""
    idx = np.asarray(idx, dtype=np.int64)
    shifts = np.arange(L - 1, -1, -1, dtype=np.int64)
    return ((idx[:, None] >> shifts) & 1).astype(np.uint8)


def sample_bitstrings(state, n_shots: int, seed: int, prep_failure: float = 0.0) -> ShotRecord:
    """Born-rule samples of the computational basis.

    ``prep_failure`` is the per-atom probability that the trap was not
    loaded; any failed atom marks the whole shot as ``prep_ok = False``.
    """
    if n_shots < 1:
        raise MeasurementError("n_shots must be >= 1")
    if not 0.0 <= prep_failure <= 1.0:
        raise MeasurementError("prep_failure must be a probability")
    amp = amplitudes_of(state)
    L = int(round(np.log2(len(amp))))
    p = amp.real**2 + amp.imag**2
    cdf = np.cumsum(p)
    cdf /= cdf[-1]
    rng = np.random.default_rng(derive_seed(seed, _SAMPLE))
    idx = np.minimum(np.searchsorted(cdf, rng.random(n_shots), side="right"), len(p) - 1)
    ok = None
    if prep_failure > 0:
        prng = np.random.default_rng(derive_seed(seed, _PREP))
        ok = ~np.any(prng.random((n_shots, L)) < prep_failure, axis=1)
    return ShotRecord(index_to_bits(idx, L), ok, seed)


def apply_readout_errors(record: ShotRecord, model: ReadoutModel, seed: int) -> ShotRecord:
    """Flip each bit independently: 0→1 with p01, 1→0 with p10."""
    rng = np.random.default_rng(seed)
    u = rng.random(record.bits.shape)
    b = record.bits
    flip = np.where(b == 0, u < model.p01, u < model.p10)
    meta = dict(record.metadata, readout=model.to_dict())
    return ShotRecord(b ^ flip.astype(np.uint8), record.prep_ok.copy(), record.seed, meta)


def postselect(record: ShotRecord, criterion=None) -> tuple[ShotRecord, float]:
    """Keep the shots that pass ``criterion`` and report the retention rate.

    ``criterion`` is ``None`` (use the preparation flags), a boolean mask over
    shots, or a callable mapping the bit matrix to such a mask.
    """
    if criterion is None:
        keep = record.prep_ok
    elif callable(criterion):
        keep = np.asarray(criterion(record.bits), dtype=bool)
    else:
        keep = np.asarray(criterion, dtype=bool)
    if keep.shape != (record.n_shots,):
        raise MeasurementError("criterion must select per shot")
    n = int(keep.sum())
    if n == 0:
        raise EmptyRecordError("post-selection removed every shot")
    kept = ShotRecord(record.bits[keep], record.prep_ok[keep], record.seed, dict(record.metadata))
    return kept, n / record.n_shots


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """Column-stochastic matrix, ``entries[measured, true]``."""

    entries: np.ndarray

    def __post_init__(self):
        e = np.array(self.entries, dtype=float)
        if e.shape not in ((2, 2), (4, 4)):
            raise MeasurementError("confusion matrix must be 2x2 or 4x4")
        if np.any(np.abs(e.sum(axis=0) - 1.0) > 1e-12):
            raise MeasurementError("columns must sum to 1")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def order(self) -> int:
        return 1 if len(self.entries) == 2 else 2

    def inverse(self) -> np.ndarray:
        if abs(np.linalg.det(self.entries)) < 1e-15:
            raise SingularModelError("confusion matrix is singular")
        return np.linalg.inv(self.entries)


def confusion_matrix(model: ReadoutModel, order: int = 1) -> ConfusionMatrix:
    """One-site matrix [[p00, p10], [p01, p11]] or its two-site Kronecker square.

    Two-site outcomes are ordered 00, 01, 10, 11 with the first bit the first
    site of the pair.
    """
    model.require_invertible()
    c1 = np.array([[model.p00, model.p10], [model.p01, model.p11]])
    if order == 1:
        return ConfusionMatrix(c1)
    if order == 2:
        return ConfusionMatrix(np.kron(c1, c1))
    raise MeasurementError("order must be 1 or 2")


def _xyw(model: ReadoutModel) -> tuple[float, float, float]:
    x = (model.p00 - model.p01) ** 2
    w = (model.p11 - model.p10) ** 2
    y = -(model.p00 - model.p01) * (model.p11 - model.p10)
    return x, y, w


def mitigate_magnetization(raw_m, model: ReadoutModel):
    """𝓜̃ = 2(𝓜 + p00 − p01)/(p11 − p10 − p01 + p00) − 1."""
    model.require_invertible()
    den = model.p11 - model.p10 - model.p01 + model.p00
    return 2.0 * (np.asarray(raw_m, dtype=float) + model.p00 - model.p01) / den - 1.0


def mitigate_correlator(raw_g, mitigated_m, model: ReadoutModel):
    """𝓖̃ = −(w + x + 2y + 2(w − x)𝓜̃ − 4𝓖)/(w + x − 2y).

    ``mitigated_m`` is the mitigated magnetization averaged over the two sites
    of each pair, taken from the same shots.
    """
    model.require_invertible()
    x, y, w = _xyw(model)
    den = w + x - 2 * y
    g, m = np.asarray(raw_g, dtype=float), np.asarray(mitigated_m, dtype=float)
    return -(w + x + 2 * y + 2 * (w - x) * m - 4 * g) / den


def mitigate_counts(histogram, matrix: ConfusionMatrix) -> np.ndarray:
    """Apply 𝒞⁻¹ to an empirical outcome distribution.

    The result is a quasi-probability vector; small negative entries are
    returned as they are.
    """
    h = np.asarray(histogram, dtype=float)
    if h.shape != (len(matrix.entries),):
        raise MeasurementError("histogram length must match the confusion matrix")
    n = h.sum()
    if n <= 0:
        raise MeasurementError("empty histogram")
    return matrix.inverse() @ (h / n)


def expectation_from_quasi(q) -> float:
    """⟨σᶻ⟩ (length 2) or ⟨σᶻσᶻ⟩ (length 4) from outcome quasi-probabilities."""
    q = np.asarray(q, dtype=float)
    if len(q) == 2:
        return float(q[1] - q[0])
    return float(q[0] - q[1] - q[2] + q[3])


def readout_channel(probabilities, model: ReadoutModel) -> np.ndarray:
    """Exact measured-outcome distribution for a true distribution over 2^L states."""
    p = np.asarray(probabilities, dtype=float)
    L = int(round(np.log2(len(p))))
    c1 = np.array([[model.p00, model.p10], [model.p01, model.p11]])
    t = p.reshape((2,) * L)
    for axis in range(L):
        t = np.moveaxis(np.tensordot(c1, t, axes=([1], [axis])), 0, axis)
    return t.reshape(-1)


# distribution-level moments, shared by shot estimators and exact channel checks

def _site_pairs(L: int, r: int, periodic: bool = True):
    i = np.arange(L if periodic else L - r)
    return i, (i + r) % L


def moments_from_probabilities(probabilities) -> tuple[np.ndarray, np.ndarray]:
    """(⟨σᶻ_i⟩, ⟨σᶻ_iσᶻ_j⟩) of a basis-state distribution."""
    p = np.asarray(probabilities, dtype=float)
    L = int(round(np.log2(len(p))))
    z = z_table(L).astype(float)
    return z @ p, (z * p) @ z.T


def moments_from_shots(record: ShotRecord) -> tuple[np.ndarray, np.ndarray]:
    s = record.spins()
    return s.mean(axis=0), (s.T @ s) / record.n_shots


def mitigate_moments(z, zz, model: ReadoutModel) -> tuple[np.ndarray, np.ndarray]:
    """Invert the independent-flip channel on first and second moments.

    Per site the channel maps σᶻ to α + βσᶻ with α = p01 − p10 and
    β = 1 − p01 − p10, which is the same algebra as the 4×4 inversion.
    """
    model.require_invertible()
    alpha = model.p01 - model.p10
    beta = 1.0 - model.p01 - model.p10
    zt = (np.asarray(z, float) - alpha) / beta
    zz = np.asarray(zz, float)
    zzt = (zz - alpha**2 - alpha * beta * (zt[:, None] + zt[None, :])) / beta**2
    np.fill_diagonal(zzt, 1.0)
    return zt, zzt


@dataclass
class ShotEstimates:
    magnetization: float
    domain_wall: float
    correlators: np.ndarray  # connected, r = 1 … ⌊L/2⌋
    qfi_upper_bound: float

    def to_dict(self) -> dict:
        return {
            "magnetization": self.magnetization,
            "domain_wall": self.domain_wall,
            "connected_correlators": {str(r + 1): float(c) for r, c in enumerate(self.correlators)},
            "qfi_density_upper_bound": self.qfi_upper_bound,
        }

    def overshoot(self) -> bool:
        return abs(self.magnetization) > 1 or abs(self.domain_wall) > 1


def estimates_from_moments(z, zz, periodic: bool = True) -> ShotEstimates:
    z, zz = np.asarray(z, float), np.asarray(zz, float)
    L = len(z)
    i, j = _site_pairs(L, 1, periodic)
    corr = []
    for r in range(1, L // 2 + 1):
        a, b = _site_pairs(L, r, periodic)
        corr.append(np.mean(zz[a, b] - z[a] * z[b]))
    m = float(z.mean())
    m2 = float(zz.sum()) / L**2
    return ShotEstimates(m, float(zz[i, j].mean()), np.array(corr), L * (m2 - m * m))


def shot_estimates(record: ShotRecord, model: ReadoutModel | None = None,
                   periodic: bool = True) -> ShotEstimates:
    """𝓜, 𝓖, per-distance connected correlators and the pooled QFI bound.

    With ``model`` given the moments are mitigated first. The QFI estimate is
    L · Var(𝕄) over shots, which bounds the pure-state value from above.
    """
    z, zz = moments_from_shots(record)
    if model is not None:
        z, zz = mitigate_moments(z, zz, model)
    return estimates_from_moments(z, zz, periodic)

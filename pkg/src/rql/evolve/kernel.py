"""State-vector kernels.

Basis index ``s`` encodes site ``i`` in bit ``L - 1 - i`` (site 0 is the most
significant bit), bit value 1 is the Rydberg state with σᶻ = +1. Every model
here has a diagonal σᶻ part plus a uniform transverse field, so ``H ψ`` is a
diagonal multiply plus ``L`` bit flips.
"""
from __future__ import annotations

import os
from functools import lru_cache

import numba
import numpy as np
from scipy.linalg import eigh_tridiagonal

DEFAULT_MAX_L = 16


class SizeLimitError(MemoryError):
    """The requested system does not fit the exact backend."""


def max_sites() -> int:
    return int(os.environ.get("RQL_MAX_L", DEFAULT_MAX_L))


def check_size(L: int, limit: int | None = None) -> None:
    limit = max_sites() if limit is None else limit
    if L > limit:
        raise SizeLimitError(
            f"L={L} exceeds the exact state-vector limit L<={limit} (2^{L} amplitudes); "
            "set RQL_MAX_L to override"
        )


@lru_cache(maxsize=8)
def z_table(L: int) -> np.ndarray:
    """(L, 2^L) table of σᶻ_i eigenvalues, read-only."""
    idx = np.arange(2**L, dtype=np.int64)
    shifts = (L - 1 - np.arange(L))[:, None]
    z = (2 * ((idx[None, :] >> shifts) & 1) - 1).astype(np.int8)
    z.setflags(write=False)
    return z


@numba.njit(cache=True, nogil=True)
def _diagonal(L, pairs, couplings, h_z, out):
    n = out.shape[0]
    for s in range(n):
        e = 0.0
        for b in range(pairs.shape[0]):
            zi = ((s >> (L - 1 - pairs[b, 0])) & 1) * 2 - 1
            zj = ((s >> (L - 1 - pairs[b, 1])) & 1) * 2 - 1
            e += couplings[b] * zi * zj
        for i in range(L):
            zi = ((s >> (L - 1 - i)) & 1) * 2 - 1
            e -= h_z[i] * zi
        out[s] = e
    return out


@numba.njit(cache=True, nogil=True)
def _apply(psi, diag, h_x, L, out):
    n = psi.shape[0]
    for s in range(n):
        acc = 0j
        for k in range(L):
            acc += psi[s ^ (1 << k)]
        out[s] = diag[s] * psi[s] + h_x * acc
    return out


class DiagonalPlusField:
    """H = diag(d) + h_x Σ σˣ acting on 2^L amplitudes."""

    def __init__(self, L: int, diag: np.ndarray, h_x: float):
        self.L = L
        self.diag = np.ascontiguousarray(diag, dtype=np.float64)
        self.h_x = float(h_x)

    @classmethod
    def from_terms(cls, terms) -> "DiagonalPlusField":
        L = terms.n_sites
        pairs = np.ascontiguousarray(terms.pairs, dtype=np.int64)
        couplings = np.ascontiguousarray(terms.couplings, dtype=np.float64)
        diag = _diagonal(L, pairs, couplings, np.ascontiguousarray(terms.h_z, dtype=np.float64),
                         np.empty(2**L))
        return cls(L, diag, terms.h_x)

    def matvec(self, psi: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        if out is None:
            out = np.empty_like(psi)
        return _apply(psi, self.diag, self.h_x, self.L, out)

    def norm_bound(self) -> float:
        return float(np.abs(self.diag).max() + self.L * abs(self.h_x))

    def dense(self) -> np.ndarray:
        n = 2**self.L
        H = np.diag(self.diag).astype(np.float64)
        idx = np.arange(n)
        for k in range(self.L):
            H[idx ^ (1 << k), idx] += self.h_x
        return H


# below this the a-posteriori estimate is dominated by roundoff
TOL_FLOOR = 1e-14


class KrylovError(RuntimeError):
    pass


def expm_krylov(op: DiagonalPlusField, psi: np.ndarray, dt: float, tol: float = 1e-12,
                m_max: int = 40) -> np.ndarray:
    """exp(-i H dt) ψ by Lanczos with an a-posteriori error estimate.

    The step is halved recursively when ``m_max`` Lanczos vectors do not reach
    ``tol``.
    """
    beta0 = np.linalg.norm(psi)
    if beta0 == 0.0 or dt == 0.0:
        return psi.copy()
    n = psi.shape[0]
    m_max = min(m_max, n)
    V = np.empty((m_max, n), dtype=np.complex128)
    alpha = np.zeros(m_max)
    beta = np.zeros(m_max)
    V[0] = psi / beta0
    w = np.empty(n, dtype=np.complex128)
    for j in range(m_max):
        op.matvec(V[j], w)
        alpha[j] = np.vdot(V[j], w).real
        w -= alpha[j] * V[j]
        if j > 0:
            w -= beta[j - 1] * V[j - 1]
        beta[j] = np.linalg.norm(w)
        k = j + 1
        if k == 1:
            evals, U = alpha[:1], np.ones((1, 1))
        else:
            evals, U = eigh_tridiagonal(alpha[:k], beta[:k - 1])
        coef = U @ (np.exp(-1j * evals * dt) * U[0])
        if beta[j] * abs(coef[-1]) < tol or beta[j] < 1e-14 * beta0 or k == n:
            return beta0 * (coef @ V[:k])
        if k < m_max:
            V[k] = w / beta[j]
    if dt < 1e-9:
        raise KrylovError("Krylov propagation failed to converge")
    sub_tol = max(tol / 2, TOL_FLOOR)
    half = expm_krylov(op, psi, dt / 2, sub_tol, m_max)
    return expm_krylov(op, half, dt / 2, sub_tol, m_max)

"""Pure states, density matrices and entropies in the preferred basis.

All logarithms are natural (entropies in nats) and ``0 log 0 = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MIN_PROB = 1e-12
SIMPLEX_TOL = 1e-12
HERMITIAN_TOL = 1e-12
NEG_EIG_TOL = 1e-10
MIN_LEVEL_GAP = 1e-9


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class PureState:
    """State with amplitudes ``sqrt(probs[k]) * exp(1j * phases[k])``."""

    probs: np.ndarray
    phases: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=np.float64).ravel()
        th = np.asarray(self.phases, dtype=np.float64).ravel()
        if p.size < 2:
            raise ValueError("a state needs dimension n >= 2")
        if th.shape != p.shape:
            raise ValueError("probs and phases must have the same length")
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(th))):
            raise ValueError("probs and phases must be finite")
        if np.any(p < MIN_PROB):
            raise ValueError(f"all probabilities must be at least {MIN_PROB}")
        if abs(math.fsum(p) - 1.0) > SIMPLEX_TOL:
            raise ValueError(f"probabilities sum to {math.fsum(p)!r}, not 1")
        object.__setattr__(self, "probs", _frozen(p.copy()))
        object.__setattr__(self, "phases", _frozen(np.mod(th, 2.0 * np.pi)))

    @property
    def n(self) -> int:
        return self.probs.size

    def amplitudes(self) -> np.ndarray:
        return np.sqrt(self.probs) * np.exp(1j * self.phases)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    entries: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=np.complex128)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("a density matrix must be square")
        if np.max(np.abs(a - a.conj().T)) > HERMITIAN_TOL:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(a).real - 1.0) > HERMITIAN_TOL:
            raise ValueError(f"density matrix has trace {np.trace(a).real!r}")
        if hermitian_eigenvalues(a)[-1] < -NEG_EIG_TOL:
            raise ValueError("density matrix has a negative eigenvalue")
        object.__setattr__(self, "entries", _frozen(a.copy()))

    @property
    def n(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True, eq=False)
class Observable:
    """Nondegenerate observable diagonal in the preferred basis."""

    eigenvalues: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.eigenvalues, dtype=np.float64).ravel()
        if not np.all(np.isfinite(x)):
            raise ValueError("eigenvalues must be finite")
        if x.size >= 2 and np.min(np.diff(np.sort(x))) < MIN_LEVEL_GAP:
            raise ValueError("observable is degenerate (eigenvalues not distinct)")
        object.__setattr__(self, "eigenvalues", _frozen(x.copy()))


def density_of(state: PureState) -> DensityMatrix:
    amp = state.amplitudes()
    return DensityMatrix(np.outer(amp, amp.conj()))


def offdiag_magnitudes(rho) -> np.ndarray:
    """Entrywise ``|rho_ij|`` (the diagonal is included unchanged in magnitude)."""
    a = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho)
    return np.abs(a)


def offdiag_l1(rho) -> float:
    a = offdiag_magnitudes(rho)
    return float(a.sum() - np.trace(a))


def hermitian_eigenvalues(rho) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix, sorted in descending order."""
    a = np.asarray(rho.entries if isinstance(rho, DensityMatrix) else rho)
    a = a.astype(np.complex128 if np.iscomplexobj(a) else np.float64)
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    if np.max(np.abs(a - a.conj().T), initial=0.0) > HERMITIAN_TOL * scale:
        raise ValueError("matrix is not Hermitian")
    return np.linalg.eigvalsh(0.5 * (a + a.conj().T))[::-1]


def _entropy_of(values: np.ndarray) -> float:
    nz = values[values > 0.0]
    # an eigenvalue of 1 + eps would give -0.0...02; entropy is nonnegative
    return max(0.0, float(-np.sum(nz * np.log(nz))))


def vn_entropy(rho) -> float:
    lam = hermitian_eigenvalues(rho)
    if lam[-1] < -NEG_EIG_TOL:
        raise ValueError(f"negative eigenvalue {lam[-1]!r}")
    return _entropy_of(lam)


def shannon_entropy(p) -> float:
    p = np.asarray(p, dtype=np.float64)
    if np.any(p < 0):
        raise ValueError("probabilities must be nonnegative")
    if abs(math.fsum(p) - 1.0) > 1e-9:
        raise ValueError("probabilities must sum to 1")
    return _entropy_of(p)


def variance(p, obs: Observable) -> float:
    """Variance of the observable when outcome ``k`` has probability ``p[k]``."""
    p = np.asarray(p, dtype=np.float64)
    x = obs.eigenvalues
    if p.shape != x.shape:
        raise ValueError(f"{p.size} probabilities for {x.size} eigenvalues")
    mean = float(p @ x)
    return float(p @ (x - mean) ** 2)


def purity(rho) -> float:
    a = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho)
    return float(np.real(np.vdot(a, a)))

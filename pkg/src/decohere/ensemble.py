"""Exact and Monte Carlo ensemble averages over an unravelling model.

One pass over the law (or over sampled trials) produces every quantity at
once: the mean density matrix ``E[sqrt(pi_i pi_j) exp(i(phi_i - phi_j))]``,
the cross-term matrix ``E[sqrt(pi_i pi_j)]``, the expected Shannon entropy
of ``pi`` and, given an observable, the expected variance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from . import _reduce
from .modes import Exact, MonteCarlo
from .quantum_state import Observable, PureState, shannon_entropy, variance
from .unravelling import (
    DiscreteLaw,
    NoFiniteSupportError,
    PhaseOnly,
    UnravellingModel,
    check_model,
    exact_law,
    has_finite_support,
    sample_batch,
)


@dataclass(frozen=True, eq=False)
class EnsembleEstimate:
    """An ensemble average with its standard error.

    For a complex matrix ``std_err`` is complex too: its real and imaginary
    parts are the standard errors of the real and imaginary parts of
    ``value``. Exact estimates carry zero error and ``trials == 0``.
    """

    value: np.ndarray | float
    exact: bool
    std_err: np.ndarray | float
    trials: int = 0


@dataclass(frozen=True, eq=False)
class EnsembleSummary:
    density: EnsembleEstimate
    cross_terms: EnsembleEstimate
    shannon: EnsembleEstimate
    shannon_terms: EnsembleEstimate
    variance: EnsembleEstimate | None


def _features(pi: np.ndarray, phi: np.ndarray, x: np.ndarray | None) -> np.ndarray:
    m, n = pi.shape
    sq = np.sqrt(pi)
    amp = sq[:, :, None] * sq[:, None, :]
    dphi = phi[:, :, None] - phi[:, None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(pi > 0.0, pi * np.log(np.where(pi > 0.0, pi, 1.0)), 0.0)
    cols = [
        (amp * np.cos(dphi)).reshape(m, n * n),
        (amp * np.sin(dphi)).reshape(m, n * n),
        amp.reshape(m, n * n),
        -plogp.sum(axis=1, keepdims=True),
        -plogp,
    ]
    if x is not None:
        mean = pi @ x
        cols.append((pi * (x[None, :] - mean[:, None]) ** 2).sum(axis=1, keepdims=True))
    return np.concatenate(cols, axis=1)


def _unpack(mean, se, n, exact, trials, with_var) -> EnsembleSummary:
    k = n * n
    re, im, cross = mean[:k], mean[k : 2 * k], mean[2 * k : 3 * k]
    rho = (re + 1j * im).reshape(n, n)
    rho_se = (se[:k] + 1j * se[k : 2 * k]).reshape(n, n)
    if exact:
        # the law is symmetric under i <-> j; enforce it bitwise
        rho = 0.5 * (rho + rho.conj().T)
    h = 3 * k
    var = None
    if with_var:
        var = EnsembleEstimate(float(mean[h + 1 + n]), exact, float(se[h + 1 + n]), trials)
    return EnsembleSummary(
        density=EnsembleEstimate(rho, exact, rho_se, trials),
        cross_terms=EnsembleEstimate(
            cross.reshape(n, n), exact, se[2 * k : h].reshape(n, n), trials
        ),
        shannon=EnsembleEstimate(float(mean[h]), exact, float(se[h]), trials),
        shannon_terms=EnsembleEstimate(mean[h + 1 : h + 1 + n], exact, se[h + 1 : h + 1 + n], trials),
        variance=var,
    )


def _phase_only_closed_form(model: PhaseOnly, initial: PureState, obs) -> EnsembleSummary:
    p, theta = initial.probs, initial.phases
    n = initial.n
    phasor = np.array([d.mean_phasor() for d in model.per_index(n)])
    amp = np.sqrt(np.outer(p, p))
    # independent noise: E[e^{i(e_i - e_j)}] = c_i conj(c_j) off the diagonal, 1 on it
    factor = np.outer(phasor, phasor.conj())
    np.fill_diagonal(factor, 1.0)
    rho = amp * np.exp(1j * (theta[:, None] - theta[None, :])) * factor
    np.fill_diagonal(rho, p)
    zero = np.zeros((n, n))
    var = None
    if obs is not None:
        var = EnsembleEstimate(variance(p, obs), True, 0.0, 0)
    return EnsembleSummary(
        density=EnsembleEstimate(rho, True, zero + 0j, 0),
        cross_terms=EnsembleEstimate(amp, True, zero, 0),
        shannon=EnsembleEstimate(shannon_entropy(p), True, 0.0, 0),
        shannon_terms=EnsembleEstimate(-p * np.log(p), True, np.zeros(n), 0),
        variance=var,
    )


def law_summary(law: DiscreteLaw, obs: Observable | None = None) -> EnsembleSummary:
    """Exact ensemble quantities of an explicit finite law of ``(pi, phi)``."""
    n = law.pis.shape[1]
    x = None if obs is None else obs.eigenvalues
    f = _features(law.pis, law.phis, x)
    mean = np.array([math.fsum(law.weights * col) for col in f.T])
    return _unpack(mean, np.zeros_like(mean), n, True, 0, x is not None)


def summarize(
    model: UnravellingModel,
    initial: PureState,
    mode: Exact | MonteCarlo = Exact(),
    obs: Observable | None = None,
) -> EnsembleSummary:
    """All ensemble quantities from a single pass."""
    check_model(model, initial)
    n = initial.n
    x = None
    if obs is not None:
        if obs.eigenvalues.size != n:
            raise ValueError(f"observable has {obs.eigenvalues.size} levels for n = {n}")
        x = obs.eigenvalues
    if isinstance(mode, Exact):
        if isinstance(model, PhaseOnly) and not model.is_degenerate:
            return _phase_only_closed_form(model, initial, obs)
        if not has_finite_support(model):
            raise NoFiniteSupportError(
                f"exact averages are unavailable for {type(model).__name__}"
            )
        return law_summary(exact_law(model, initial), obs)
    if not isinstance(mode, MonteCarlo):
        raise TypeError(f"unsupported mode {mode!r}")
    mean, se = _reduce.moments(
        lambda t: _features(*sample_batch(model, initial, mode.seed, t), x), mode.trials
    )
    return _unpack(mean, se, n, False, mode.trials, x is not None)


def average_density(model, initial, mode=Exact()) -> EnsembleEstimate:
    return summarize(model, initial, mode).density


def cross_term_matrix(model, initial, mode=Exact()) -> EnsembleEstimate:
    return summarize(model, initial, mode).cross_terms


def expected_shannon(model, initial, mode=Exact()) -> EnsembleEstimate:
    return summarize(model, initial, mode).shannon


def expected_variance(model, initial, obs: Observable, mode=Exact()) -> EnsembleEstimate:
    return summarize(model, initial, mode, obs).variance


def dirichlet_cross_moment(kappa: float, p) -> np.ndarray:
    """Closed-form ``E[sqrt(pi_i pi_j)]`` for ``pi ~ Dirichlet(kappa * p)``, ``i != j``.

    The diagonal holds ``E[pi_i] = p_i``.
    """
    a = kappa * np.asarray(p, dtype=np.float64)
    half = np.exp(gammaln(a + 0.5) - gammaln(a))
    out = np.outer(half, half) / kappa
    np.fill_diagonal(out, np.asarray(p, dtype=np.float64))
    return out


def dirichlet_expected_variance(kappa: float, p, obs: Observable) -> float:
    """``E[var_pi(X)] = var_p(X) * kappa / (kappa + 1)`` for the Dirichlet family."""
    return variance(p, obs) * kappa / (kappa + 1.0)

"""Random transformations of a pure state's probabilities and phases.

Each model maps an initial state ``(p, theta)`` to a random draw
``(pi, phi)``. Draws are a pure function of ``(model, initial, seed,
trial_index)``; see :mod:`decohere.rng`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from . import _reduce, rng
from .modes import Exact, MonteCarlo
from .prob_space import (
    FiniteProbabilitySpace,
    Partition,
    RandomVariable,
    condition,
    gram_independence,
    levels,
)
from .quantum_state import PureState

EXACT_MEAN_TOL = 1e-12


class NoFiniteSupportError(ValueError):
    """Raised when an exact computation is requested for a continuous law."""


@dataclass(frozen=True, eq=False)
class Draw:
    pi: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        pi = np.asarray(self.pi, dtype=np.float64)
        if np.any(pi < 0) or abs(math.fsum(pi) - 1.0) > 1e-12:
            raise ValueError("pi must lie on the probability simplex")
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "phi", np.asarray(self.phi, dtype=np.float64))


@dataclass(frozen=True)
class PhaseDistribution:
    """Law of the additive phase noise on one basis index.

    ``kind`` is ``"uniform_full"`` (uniform on [0, 2pi)), ``"uniform_symmetric"``
    (uniform on (-a, a)) or ``"degenerate"`` (always ``value``).
    """

    kind: str
    a: float = 0.0
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in ("uniform_full", "uniform_symmetric", "degenerate"):
            raise ValueError(f"unknown phase distribution {self.kind!r}")
        if self.kind == "uniform_symmetric" and not self.a > 0:
            raise ValueError("uniform_symmetric needs a > 0")

    @property
    def is_degenerate(self) -> bool:
        return self.kind == "degenerate"

    def from_uniform(self, u: np.ndarray) -> np.ndarray:
        if self.kind == "uniform_full":
            return 2.0 * np.pi * u
        if self.kind == "uniform_symmetric":
            return self.a * (2.0 * u - 1.0)
        return np.full_like(u, self.value)

    def mean_phasor(self) -> complex:
        """``E[exp(1j * eps)]`` in closed form."""
        if self.kind == "uniform_full":
            return 0j
        if self.kind == "uniform_symmetric":
            return complex(math.sin(self.a) / self.a)
        return complex(math.cos(self.value), math.sin(self.value))


@dataclass(frozen=True, eq=False)
class ProjectiveMeasurement:
    """Unrecorded measurement of X: ``pi`` is the indicator of the outcome."""

    variant = "projective_measurement"


@dataclass(frozen=True, eq=False)
class PartitionConditioning:
    """``pi_i = P(X = x_i | partition)`` evaluated at a randomly drawn atom."""

    space: FiniteProbabilitySpace
    x_assignment: RandomVariable
    partition: Partition
    conditional: np.ndarray = field(init=False, repr=False)

    variant = "partition_conditioning"

    def __post_init__(self):
        pis = condition(self.space, self.x_assignment, self.partition)
        table = np.stack([rv.values for rv in pis], axis=1)
        table.setflags(write=False)
        object.__setattr__(self, "conditional", table)

    @property
    def n(self) -> int:
        return self.conditional.shape[1]

    def level_probs(self) -> np.ndarray:
        idx = np.searchsorted(levels(self.x_assignment), self.x_assignment.values)
        return np.array(
            [math.fsum(self.space.weights[idx == i]) for i in range(self.n)]
        )


@dataclass(frozen=True)
class PhaseOnly:
    """Probabilities untouched; phase ``i`` gets independent noise ``phase_spec[i]``.

    A single-element ``phase_spec`` applies to every index.
    """

    phase_spec: tuple

    variant = "phase_only"

    def __post_init__(self):
        spec = self.phase_spec
        if isinstance(spec, PhaseDistribution):
            spec = (spec,)
        spec = tuple(spec)
        if not spec:
            raise ValueError("phase_spec must not be empty")
        object.__setattr__(self, "phase_spec", spec)

    def per_index(self, n: int) -> tuple:
        if len(self.phase_spec) == 1:
            return self.phase_spec * n
        if len(self.phase_spec) != n:
            raise ValueError(f"phase_spec has {len(self.phase_spec)} entries for n = {n}")
        return self.phase_spec

    @property
    def is_degenerate(self) -> bool:
        return all(d.is_degenerate for d in self.phase_spec)


@dataclass(frozen=True)
class DirichletMartingale:
    """``pi ~ Dirichlet(kappa * p)``, so ``E[pi] = p``.

    With ``phase_coupling="linear"`` the phases move by ``gamma * (pi - p)``.
    """

    kappa: float = 4.0
    phase_coupling: str = "none"
    gamma: float = 0.0

    variant = "dirichlet_martingale"

    def __post_init__(self):
        if not (self.kappa > 0 and math.isfinite(self.kappa)):
            raise ValueError("kappa must be positive")
        if self.phase_coupling not in ("none", "linear"):
            raise ValueError(f"unknown phase coupling {self.phase_coupling!r}")
        if self.phase_coupling == "none" and self.gamma != 0.0:
            raise ValueError("gamma is only meaningful with linear phase coupling")


@dataclass(frozen=True)
class UniformStub:
    """Adversarial non-martingale: always returns the uniform distribution."""

    variant = "uniform_stub"


UnravellingModel = Union[
    ProjectiveMeasurement, PartitionConditioning, PhaseOnly, DirichletMartingale, UniformStub
]


@dataclass(frozen=True, eq=False)
class DiscreteLaw:
    """Finitely supported law of ``(pi, phi)``, support sorted by descending weight."""

    weights: np.ndarray
    pis: np.ndarray
    phis: np.ndarray

    def __post_init__(self):
        if np.any(self.weights <= 0) or abs(math.fsum(self.weights) - 1.0) > 1e-12:
            raise ValueError("law weights must be positive and sum to 1")

    @property
    def points(self) -> list[tuple[float, Draw]]:
        return [
            (float(w), Draw(pi, phi))
            for w, pi, phi in zip(self.weights, self.pis, self.phis)
        ]

    def __len__(self) -> int:
        return self.weights.size


def check_model(model: UnravellingModel, initial: PureState) -> None:
    """Raise ``ValueError`` if ``model`` cannot act on states of this dimension."""
    n = initial.n
    if isinstance(model, PartitionConditioning):
        if model.n != n:
            raise ValueError(f"X takes {model.n} levels but the state has n = {n}")
        if np.max(np.abs(model.level_probs() - initial.probs)) > 1e-9:
            raise ValueError("P(X = x_i) on the space does not match the state's probabilities")
    elif isinstance(model, PhaseOnly):
        model.per_index(n)
    elif not isinstance(model, (ProjectiveMeasurement, DirichletMartingale, UniformStub)):
        raise TypeError(f"not an unravelling model: {model!r}")


def _categorical(weights: np.ndarray, seed: int, trials: np.ndarray) -> np.ndarray:
    u = rng.uniform(seed, trials, rng.STREAM_CATEGORICAL)
    cdf = np.cumsum(weights)
    return np.minimum(np.searchsorted(cdf, u * cdf[-1], side="right"), weights.size - 1)


def sample_batch(
    model: UnravellingModel, initial: PureState, seed: int, trials
) -> tuple[np.ndarray, np.ndarray]:
    """Draws for many trial indices at once; row ``k`` equals ``sample(..., trials[k])``."""
    check_model(model, initial)
    trials = np.atleast_1d(np.asarray(trials, dtype=np.uint64))
    n, m = initial.n, trials.size
    p, theta = initial.probs, initial.phases
    phi = np.broadcast_to(theta, (m, n)).copy()

    if isinstance(model, ProjectiveMeasurement):
        pi = np.zeros((m, n))
        pi[np.arange(m), _categorical(p, seed, trials)] = 1.0
    elif isinstance(model, PartitionConditioning):
        atoms = _categorical(model.space.weights, seed, trials)
        pi = model.conditional[atoms].copy()
    elif isinstance(model, PhaseOnly):
        pi = np.broadcast_to(p, (m, n)).copy()
        for i, dist in enumerate(model.per_index(n)):
            if not dist.is_degenerate:
                phi[:, i] += dist.from_uniform(rng.uniform(seed, trials, rng.STREAM_PHASE + i))
            else:
                phi[:, i] += dist.value
    elif isinstance(model, DirichletMartingale):
        pi = rng.dirichlet(model.kappa * p, seed, trials)
        if model.phase_coupling == "linear":
            phi += model.gamma * (pi - p)
    else:
        pi = np.full((m, n), 1.0 / n)
    return pi, phi


def sample(model: UnravellingModel, initial: PureState, seed: int, trial_index: int) -> Draw:
    pi, phi = sample_batch(model, initial, seed, [trial_index])
    return Draw(pi[0], phi[0])


def discrete_law(weights, pis, phis) -> DiscreteLaw:
    """Build a law from support points; duplicates merge, heaviest first."""
    merged: dict[bytes, list] = {}
    for w, pi, phi in zip(weights, pis, phis):
        key = pi.tobytes() + phi.tobytes()
        if key in merged:
            merged[key][0].append(w)
        else:
            merged[key] = [[w], pi, phi]
    rows = [(math.fsum(ws), pi, phi) for ws, pi, phi in merged.values()]
    rows.sort(key=lambda r: -r[0])
    return DiscreteLaw(
        np.array([r[0] for r in rows]),
        np.array([r[1] for r in rows]),
        np.array([r[2] for r in rows]),
    )


def exact_law(model: UnravellingModel, initial: PureState) -> DiscreteLaw:
    """Enumerate the support of a finitely supported model."""
    check_model(model, initial)
    n, p, theta = initial.n, initial.probs, initial.phases
    if isinstance(model, ProjectiveMeasurement):
        return discrete_law(p, np.eye(n), np.tile(theta, (n, 1)))
    if isinstance(model, PartitionConditioning):
        w = model.space.weights
        blocks = model.partition.blocks
        bw = [math.fsum(w[list(b)]) for b in blocks]
        pis = np.array([model.conditional[b[0]] for b in blocks])
        return discrete_law(bw, pis, np.tile(theta, (len(blocks), 1)))
    if isinstance(model, PhaseOnly) and model.is_degenerate:
        shift = np.array([d.value for d in model.per_index(n)])
        return discrete_law([1.0], p[None, :], (theta + shift)[None, :])
    if isinstance(model, UniformStub):
        return discrete_law([1.0], np.full((1, n), 1.0 / n), theta[None, :])
    raise NoFiniteSupportError(f"{type(model).__name__} has no finite support")


def has_finite_support(model: UnravellingModel) -> bool:
    if isinstance(model, PhaseOnly):
        return model.is_degenerate
    return not isinstance(model, DirichletMartingale)


def pi_law(model: UnravellingModel, initial: PureState) -> DiscreteLaw:
    """Law of ``pi`` alone (phases set to the initial ones).

    Finite for every model except the Dirichlet family, because phase noise
    never touches the probabilities.
    """
    if isinstance(model, PhaseOnly):
        check_model(model, initial)
        return discrete_law([1.0], initial.probs[None, :], initial.phases[None, :])
    return exact_law(model, initial)


def pi_linearly_independent(model: UnravellingModel, initial: PureState) -> bool:
    """Whether no nonzero ``lam`` gives ``sum_k lam_k pi_k = 0`` almost surely.

    Decided by the Gram matrix over the law of ``pi`` when it is finite; the
    Dirichlet family has full-dimensional support and is independent.
    """
    if isinstance(model, DirichletMartingale):
        return True
    law = pi_law(model, initial)
    space = FiniteProbabilitySpace(tuple(range(len(law))), law.weights / math.fsum(law.weights))
    rvs = [RandomVariable(space, law.pis[:, i]) for i in range(initial.n)]
    return gram_independence(space, rvs)[0]


@dataclass(frozen=True)
class MeanConditionReport:
    passed: bool
    deviation: np.ndarray
    threshold: np.ndarray
    mean: np.ndarray
    std_err: np.ndarray
    mode: dict


def verify_mean_condition(
    model: UnravellingModel,
    initial: PureState,
    mode: Exact | MonteCarlo = Exact(),
    tol: float = 0.0,
) -> MeanConditionReport:
    """Check ``E[pi_i] = p_i`` for every basis index.

    Exact mode needs a finite law for ``pi`` and allows 1e-12; Monte Carlo
    allows ``max(tol, 3 standard errors)`` per index.
    """
    p = initial.probs
    if isinstance(mode, Exact):
        law = pi_law(model, initial)
        mean = np.array(
            [math.fsum(law.weights * law.pis[:, i]) for i in range(initial.n)]
        )
        se = np.zeros_like(mean)
        threshold = np.full_like(mean, EXACT_MEAN_TOL)
    else:
        mean, se = _reduce.moments(
            lambda t: sample_batch(model, initial, mode.seed, t)[0], mode.trials
        )
        threshold = np.maximum(tol, 3.0 * se)
    dev = np.abs(mean - p)
    return MeanConditionReport(
        passed=bool(np.all(dev <= threshold)),
        deviation=dev,
        threshold=threshold,
        mean=mean,
        std_err=se,
        mode=mode.describe(),
    )

"""Machine-checkable reports for the decoherence and information-gain claims.

Each check returns a :class:`PropositionReport` whose verdict is ``"pass"``,
``"fail"`` or ``"inapplicable"``. Inapplicable means the premise of the
claim does not hold for the model (for instance the probabilities are not
conserved, or ``pi`` is constant), which is different from a refutation.

Margins: exact checks use an absolute margin of 1e-12; statistical checks
use 3 standard errors per witness and require every seed to pass.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np

from .ensemble import EnsembleSummary, summarize
from .modes import Exact, MonteCarlo, Statistical
from .prob_space import (
    FiniteProbabilitySpace,
    Partition,
    RandomVariable,
    build_space,
    finest_partition,
    trivial_partition,
)
from .quantum_state import (
    Observable,
    PureState,
    density_of,
    offdiag_l1,
    purity,
    shannon_entropy,
    variance,
    vn_entropy,
)
from .unravelling import (
    PartitionConditioning,
    PhaseDistribution,
    PhaseOnly,
    ProjectiveMeasurement,
    UnravellingModel,
    has_finite_support,
    pi_law,
    pi_linearly_independent,
    verify_mean_condition,
)

EXACT_MARGIN = 1e-12
SIGMAS = 3.0
PHASE_ONLY_NOTE = "phase-only: neither information gain nor loss"


@dataclass(frozen=True)
class Witness:
    quantity: str
    left: float
    relation: str
    right: float
    margin: float

    @property
    def holds(self) -> bool:
        left, right, margin = float(self.left), float(self.right), float(self.margin)
        if self.relation == "<":
            return right - left > margin
        if self.relation == ">":
            return left - right > margin
        if self.relation == "<=":
            return left <= right + margin
        if self.relation == "==":
            return abs(left - right) <= margin
        raise ValueError(f"unknown relation {self.relation!r}")

    def to_dict(self) -> dict:
        return {
            "quantity": self.quantity,
            "left": float(self.left),
            "relation": self.relation,
            "right": float(self.right),
            "margin": float(self.margin),
            "holds": self.holds,
        }


@dataclass(frozen=True)
class PropositionReport:
    proposition: str
    verdict: str
    witnesses: tuple = ()
    mode: dict = field(default_factory=lambda: {"kind": "exact"})
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        return {
            "proposition": self.proposition,
            "verdict": self.verdict,
            "pass": self.passed,
            "mode": self.mode,
            "note": self.note,
            "witnesses": [w.to_dict() for w in self.witnesses],
        }


def _report(prop: str, witnesses: list[Witness], mode, note: str = "") -> PropositionReport:
    verdict = "pass" if all(w.holds for w in witnesses) else "fail"
    return PropositionReport(prop, verdict, tuple(witnesses), mode.describe(), note)


def _runs(mode) -> list[tuple[str, Exact | MonteCarlo]]:
    if isinstance(mode, Exact):
        return [("", mode)]
    if isinstance(mode, MonteCarlo):
        mode = Statistical(mode.trials, (mode.seed,))
    return [(f"[seed={r.seed}] ", r) for r in mode.runs()]


def _margin(exact: bool, se: float) -> float:
    return EXACT_MARGIN if exact else SIGMAS * float(se)


@functools.lru_cache(maxsize=32)
def _cached(model, initial, run, obs) -> EnsembleSummary:
    return summarize(model, initial, run, obs)


def cached_summary(model, initial, run, obs=None) -> EnsembleSummary:
    # lru_cache keys positional and keyword calls differently; normalise here
    return _cached(model, initial, run, obs)


def _mean_condition_holds(model, initial, run) -> bool:
    if isinstance(run, Exact):
        return verify_mean_condition(model, initial, run).passed
    # same draws as the ensemble pass: E[pi_i] is the diagonal of rho
    rho = cached_summary(model, initial, run).density
    dev = np.abs(np.diag(rho.value).real - initial.probs)
    return bool(np.all(dev <= SIGMAS * np.diag(rho.std_err).real))


def _premise(model, initial, mode) -> str | None:
    """Why the strict claims do not apply, or None when they do."""
    for _, run in _runs(mode):
        if not _mean_condition_holds(model, initial, run):
            return "mean condition fails"
    if not pi_linearly_independent(model, initial):
        if isinstance(model, PhaseOnly):
            return PHASE_ONLY_NOTE
        return "pi is linearly dependent (no information about X)"
    return None


def _summaries(model, initial, mode, obs=None) -> list[tuple[str, EnsembleSummary]]:
    return [(label, cached_summary(model, initial, run, obs)) for label, run in _runs(mode)]


def check_mean_condition(model, initial, mode=Exact()) -> PropositionReport:
    witnesses = []
    for label, run in _runs(mode):
        if isinstance(run, Exact):
            rep = verify_mean_condition(model, initial, run)
            means, thresholds = rep.mean, rep.threshold
        else:
            # E[pi] is the diagonal of rho; reuse that pass instead of drawing again
            rho = cached_summary(model, initial, run).density
            means = np.diag(rho.value).real
            thresholds = SIGMAS * np.diag(rho.std_err).real
        for i, (m, p, t) in enumerate(zip(means, initial.probs, thresholds)):
            witnesses.append(Witness(f"{label}E[pi_{i}] vs p_{i}", float(m), "==", p, float(t)))
    return _report("mean_condition", witnesses, mode)


def check_decoherence_chain(model, initial: PureState, mode=Exact()) -> PropositionReport:
    """``|rho_ij| <= E[sqrt(pi_i pi_j)] < sqrt(p_i p_j)`` for every ``i != j``."""
    reason = _premise(model, initial, mode)
    if reason == "mean condition fails":
        return PropositionReport("P1chain", "inapplicable", (), mode.describe(), reason)
    p = initial.probs
    strict = reason is None
    witnesses = []
    for label, s in _summaries(model, initial, mode):
        rho, cross = s.density, s.cross_terms
        n = initial.n
        for i in range(n):
            for j in range(i + 1, n):
                mag = abs(rho.value[i, j])
                se_mag = abs(rho.std_err[i, j])  # hypot of the re/im errors
                se_c = cross.std_err[i, j]
                witnesses.append(
                    Witness(
                        f"{label}|rho_{i}{j}| <= E[sqrt(pi_{i} pi_{j})]",
                        mag,
                        "<=",
                        cross.value[i, j],
                        _margin(rho.exact, math.hypot(se_mag, se_c)),
                    )
                )
                witnesses.append(
                    Witness(
                        f"{label}E[sqrt(pi_{i} pi_{j})] vs sqrt(p_{i} p_{j})",
                        cross.value[i, j],
                        "<" if strict else "==",
                        math.sqrt(p[i] * p[j]),
                        _margin(cross.exact, se_c),
                    )
                )
    if not strict:
        return PropositionReport("P1chain", "inapplicable", tuple(witnesses), mode.describe(), reason)
    return _report("P1chain", witnesses, mode)


def check_uncertainty_reduction(
    model, initial: PureState, obs: Observable, mode=Exact()
) -> PropositionReport:
    """Expected variance of X after the transformation is strictly below the initial one."""
    reason = _premise(model, initial, mode)
    if reason is not None:
        return PropositionReport("P3", "inapplicable", (), mode.describe(), reason)
    v0 = variance(initial.probs, obs)
    witnesses = []
    for label, s in _summaries(model, initial, mode, obs):
        v = s.variance
        witnesses.append(
            Witness(f"{label}E[var_pi(X)] < var_p(X)", v.value, "<", v0, _margin(v.exact, v.std_err))
        )
    return _report("P3", witnesses, mode)


def check_entropy_gain(model, initial: PureState, mode=Exact()) -> PropositionReport:
    """Expected Shannon entropy of ``pi`` is strictly below that of ``p``.

    Also checks the Jensen gap coordinate by coordinate.
    """
    reason = _premise(model, initial, mode)
    if reason is not None:
        return PropositionReport("P4", "inapplicable", (), mode.describe(), reason)
    p = initial.probs
    h0 = shannon_entropy(p)
    witnesses = []
    for label, s in _summaries(model, initial, mode):
        h = s.shannon
        witnesses.append(
            Witness(f"{label}E[H(pi)] < H(p)", h.value, "<", h0, _margin(h.exact, h.std_err))
        )
        t = s.shannon_terms
        for k in range(initial.n):
            witnesses.append(
                Witness(
                    f"{label}E[-pi_{k} log pi_{k}] < -p_{k} log p_{k}",
                    t.value[k],
                    "<",
                    -p[k] * math.log(p[k]),
                    _margin(t.exact, t.std_err[k]),
                )
            )
    return _report("P4", witnesses, mode)


def _is_deterministic(model, initial) -> bool:
    if isinstance(model, PhaseOnly):
        return model.is_degenerate
    return has_finite_support(model) and len(pi_law(model, initial)) == 1


def check_vn_entropy_increase(model, initial: PureState, mode=Exact()) -> PropositionReport:
    """The mean density matrix is mixed, so its von Neumann entropy exceeds the initial 0."""
    if _is_deterministic(model, initial):
        return PropositionReport(
            "vN", "inapplicable", (), mode.describe(),
            "deterministic transformation: the state stays pure",
        )
    h0 = vn_entropy(density_of(initial))
    witnesses = []
    for label, s in _summaries(model, initial, mode):
        rho = s.density
        hf = vn_entropy(rho.value)
        if rho.exact:
            witnesses.append(Witness(f"{label}H_vN(rho) > H_vN(r)", hf, ">", h0, EXACT_MARGIN))
        else:
            # purity is smooth in rho: |d tr(rho^2)| <= 2 ||d rho||_F
            se_f = math.sqrt(float(np.sum(rho.std_err.real**2 + rho.std_err.imag**2)))
            witnesses.append(
                Witness(f"{label}tr(rho^2) < 1", purity(rho.value), "<", 1.0, SIGMAS * 2.0 * se_f)
            )
            witnesses.append(Witness(f"{label}H_vN(rho) > H_vN(r)", hf, ">", h0, 0.0))
    return _report("vN", witnesses, mode)


def _canonical_space(initial: PureState):
    """Two atoms per basis index, each carrying half of ``p_k``."""
    w = np.repeat(initial.probs / 2.0, 2)
    space = build_space(w.size, w)
    x = RandomVariable(space, np.repeat(np.arange(initial.n, dtype=np.float64), 2))
    return space, x


def check_equality_cases(
    initial: PureState,
    space: FiniteProbabilitySpace | None = None,
    x_assignment: RandomVariable | None = None,
) -> list[PropositionReport]:
    """The boundary cases where the inequality chain degenerates.

    (a) conditioning on X itself decoheres completely and matches an
    unrecorded measurement; (b) phase noise alone leaves the cross terms at
    ``sqrt(p_i p_j)``; (c) conditioning on nothing changes nothing; (d) fully
    random phases leave ``diag(p)``, whose von Neumann entropy is ``H(p)``.
    """
    if space is None:
        space, x_assignment = _canonical_space(initial)
    n = initial.n
    mode = Exact()
    off = ~np.eye(n, dtype=bool)
    p = initial.probs

    finest = summarize(PartitionConditioning(space, x_assignment, finest_partition(space)), initial)
    proj = summarize(ProjectiveMeasurement(), initial)
    rho_a = finest.density.value
    a = [
        Witness("max offdiag |rho|", float(np.max(np.abs(rho_a[off]))), "==", 0.0, EXACT_MARGIN),
        Witness(
            "max |rho_finest - rho_measured|",
            float(np.max(np.abs(rho_a - proj.density.value))), "==", 0.0, 1e-14,
        ),
    ]

    dephase = PhaseOnly((PhaseDistribution("uniform_full"),))
    full = summarize(dephase, initial)
    b = [
        Witness(
            "max |E[sqrt(pi_i pi_j)] - sqrt(p_i p_j)|",
            float(np.max(np.abs(full.cross_terms.value - np.sqrt(np.outer(p, p))))),
            "==", 0.0, 1e-14,
        )
    ]

    coarse = summarize(PartitionConditioning(space, x_assignment, trivial_partition(space)), initial)
    c = [
        Witness(
            "max |rho - r|",
            float(np.max(np.abs(coarse.density.value - density_of(initial).entries))),
            "==", 0.0, 1e-14,
        )
    ]

    rho_d = full.density.value
    d = [
        Witness("max offdiag |rho|", float(np.max(np.abs(rho_d[off]))), "==", 0.0, 1e-14),
        Witness("H_vN(rho)", vn_entropy(rho_d), "==", shannon_entropy(p), 1e-10),
    ]
    return [
        _report("EQ-maximal-information", a, mode),
        _report("EQ-phase-only", b, mode, PHASE_ONLY_NOTE),
        _report("EQ-no-information", c, mode),
        _report("EQ-full-dephasing", d, mode),
    ]


def chain_profile(
    initial: PureState,
    space: FiniteProbabilitySpace,
    x_assignment: RandomVariable,
    chain: list[Partition],
    obs: Observable | None = None,
) -> list[dict]:
    """Exact summary statistics for each partition of a refinement chain."""
    rows = []
    for part in chain:
        s = summarize(PartitionConditioning(space, x_assignment, part), initial, Exact(), obs)
        rows.append(
            {
                "offdiag_l1": offdiag_l1(s.density.value),
                "expected_shannon": s.shannon.value,
                "expected_variance": None if s.variance is None else s.variance.value,
                "vn_entropy": vn_entropy(s.density.value),
            }
        )
    return rows


def check_refinement_chain(
    initial: PureState,
    space: FiniteProbabilitySpace,
    x_assignment: RandomVariable,
    chain: list[Partition],
) -> PropositionReport:
    """Finer information never increases coherence or expected Shannon entropy."""
    for coarse, fine in zip(chain, chain[1:]):
        if not fine.refines(coarse):
            raise ValueError("each partition in the chain must refine the previous one")
    rows = chain_profile(initial, space, x_assignment, chain)
    witnesses = []
    for k in range(1, len(rows)):
        for key in ("offdiag_l1", "expected_shannon"):
            witnesses.append(
                Witness(f"{key}[{k}] <= {key}[{k - 1}]", rows[k][key], "<=", rows[k - 1][key], EXACT_MARGIN)
            )
    return _report("refinement-monotonicity", witnesses, Exact())

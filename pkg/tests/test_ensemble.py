import math

import numpy as np
import pytest

from decohere import _reduce
from decohere.ensemble import (
    average_density,
    cross_term_matrix,
    dirichlet_cross_moment,
    expected_shannon,
    expected_variance,
    summarize,
)
from decohere.modes import Exact, MonteCarlo
from decohere.prob_space import build_space, make_partition, random_variable
from decohere.quantum_state import Observable, PureState, shannon_entropy, variance
from decohere.unravelling import (
    DirichletMartingale,
    NoFiniteSupportError,
    PartitionConditioning,
    PhaseDistribution,
    PhaseOnly,
    ProjectiveMeasurement,
)

HALF = PureState([0.5, 0.5], [0.0, 0.0])
SQRT2_4 = math.sqrt(2) / 4


@pytest.fixture
def four_atom_model():
    space = build_space(4, [0.25] * 4)
    x = random_variable(space, [0.0, 0.0, 1.0, 1.0])
    return PartitionConditioning(space, x, make_partition(space, [[0, 1, 2], [3]]))


def finite_models(p):
    n = len(p)
    space = build_space(2 * n, np.repeat(np.asarray(p) / 2, 2))
    x = random_variable(space, np.repeat(np.arange(n, dtype=float), 2))
    return [
        ProjectiveMeasurement(),
        PartitionConditioning(space, x, make_partition(space, [[0, 3], [1, 2]] + [[k] for k in range(4, 2 * n)])),
        PartitionConditioning(space, x, make_partition(space, [list(range(0, 2 * n, 2)), list(range(1, 2 * n, 2))])),
    ]


class TestAverageDensity:
    def test_projective_fully_decoheres(self):
        est = average_density(ProjectiveMeasurement(), HALF)
        assert est.exact and est.trials == 0
        np.testing.assert_array_equal(est.value, np.diag([0.5, 0.5]))
        assert np.all(est.std_err == 0)

    def test_symmetric_uniform_phases(self):
        m = PhaseOnly((PhaseDistribution("uniform_symmetric", a=np.pi / 2),))
        est = average_density(m, HALF)
        assert abs(est.value[0, 1]) == pytest.approx(2 / np.pi**2, abs=1e-15)
        mc = average_density(m, HALF, MonteCarlo(100_000, 4))
        assert abs(mc.value[0, 1].real - 2 / np.pi**2) < 4 * mc.std_err[0, 1].real

    def test_four_atom(self, four_atom_model):
        est = average_density(four_atom_model, HALF)
        np.testing.assert_allclose(est.value, [[0.5, SQRT2_4], [SQRT2_4, 0.5]], atol=1e-15)

    def test_continuous_exact_unavailable(self):
        with pytest.raises(NoFiniteSupportError):
            average_density(DirichletMartingale(), HALF)


class TestCrossTerms:
    def test_phase_only_equality(self):
        s = PureState([0.2, 0.3, 0.5], [1, 2, 3])
        est = cross_term_matrix(PhaseOnly((PhaseDistribution("uniform_full"),)), s)
        np.testing.assert_array_equal(est.value, np.sqrt(np.outer(s.probs, s.probs)))

    def test_projective_zero_offdiagonal(self):
        est = cross_term_matrix(ProjectiveMeasurement(), PureState([0.2, 0.3, 0.5], [0, 0, 0]))
        np.testing.assert_array_equal(est.value, np.diag([0.2, 0.3, 0.5]))

    def test_four_atom(self, four_atom_model):
        est = cross_term_matrix(four_atom_model, HALF)
        assert est.value[0, 1] == pytest.approx(SQRT2_4, abs=1e-15)
        assert est.value[0, 1] < 0.5


class TestScalars:
    def test_projective(self):
        assert expected_shannon(ProjectiveMeasurement(), HALF).value == 0.0
        assert expected_variance(ProjectiveMeasurement(), PureState([0.2, 0.8], [0, 0]), Observable([3, 7])).value == 0.0

    def test_four_atom(self, four_atom_model):
        h = expected_shannon(four_atom_model, HALF).value
        assert h == pytest.approx(0.47738562622110975, abs=1e-14)
        assert h < math.log(2)
        v = expected_variance(four_atom_model, HALF, Observable([0, 1])).value
        assert v == pytest.approx(1 / 6, abs=1e-15)

    def test_phase_only_unchanged(self):
        s = PureState([0.2, 0.3, 0.5], [0, 0, 0])
        m = PhaseOnly((PhaseDistribution("uniform_symmetric", a=1.0),))
        obs = Observable([-1, 0, 1])
        assert expected_shannon(m, s).value == shannon_entropy(s.probs)
        assert expected_variance(m, s, obs).value == variance(s.probs, obs)


@pytest.mark.parametrize("p", [[0.5, 0.5], [0.2, 0.3, 0.5], [0.1, 0.2, 0.3, 0.4]])
@pytest.mark.parametrize("k", range(3))
def test_monte_carlo_agrees_with_exact(p, k):
    s = PureState(p, np.linspace(0.0, 2.0, len(p)))
    obs = Observable(np.arange(len(p), dtype=float))
    model = finite_models(p)[k]
    ex = summarize(model, s, Exact(), obs)
    for seed in (0, 1, 2):
        mc = summarize(model, s, MonteCarlo(100_000, seed), obs)
        for a, b in ((ex.density, mc.density),):
            for part in (np.real, np.imag):
                assert np.all(np.abs(part(a.value) - part(b.value)) <= 4 * part(b.std_err) + 1e-12)
        assert np.all(np.abs(ex.cross_terms.value - mc.cross_terms.value) <= 4 * mc.cross_terms.std_err + 1e-12)
        assert abs(ex.shannon.value - mc.shannon.value) <= 4 * mc.shannon.std_err + 1e-12
        assert abs(ex.variance.value - mc.variance.value) <= 4 * mc.variance.std_err + 1e-12


@pytest.mark.parametrize(
    "model",
    [
        ProjectiveMeasurement(),
        DirichletMartingale(2.0),
        DirichletMartingale(4.0, "linear", 2.0),
        PhaseOnly((PhaseDistribution("uniform_symmetric", a=1.0),)),
    ],
)
def test_trace_diagonal_and_jensen(model):
    s = PureState([0.2, 0.3, 0.5], [0.3, 0.1, 2.0])
    est = summarize(model, s, MonteCarlo(50_000, 7))
    rho, cross = est.density, est.cross_terms
    assert abs(np.trace(rho.value).real - 1.0) <= 1e-12
    assert np.all(np.abs(np.diag(rho.value).real - s.probs) <= 3 * np.diag(rho.std_err).real + 1e-12)
    combined = np.abs(rho.std_err) + cross.std_err
    assert np.all(np.abs(rho.value) <= cross.value + 4 * combined + 1e-12)


def test_exact_trace_and_diagonal():
    s = PureState([0.1, 0.2, 0.3, 0.4], [0, 1, 2, 3])
    for m in finite_models(s.probs):
        rho = average_density(m, s).value
        assert abs(np.trace(rho).real - 1.0) <= 1e-12
        np.testing.assert_allclose(np.diag(rho).real, s.probs, atol=1e-12, rtol=0)
        np.testing.assert_array_equal(rho, rho.conj().T)


def test_standard_error_scales_as_inverse_sqrt_n():
    s = PureState([0.2, 0.3, 0.5], [0, 0, 0])
    small = summarize(DirichletMartingale(4.0), s, MonteCarlo(20_000, 3))
    large = summarize(DirichletMartingale(4.0), s, MonteCarlo(80_000, 3))
    ratio = small.cross_terms.std_err[0, 1] / large.cross_terms.std_err[0, 1]
    assert abs(ratio - 2.0) / 2.0 < 0.2
    ratio = small.shannon.std_err / large.shannon.std_err
    assert abs(ratio - 2.0) / 2.0 < 0.2


def test_bit_identical_across_worker_counts(monkeypatch):
    s = PureState([0.2, 0.3, 0.5], [0, 1, 2])
    out = []
    for w in ("1", "2", "8"):
        monkeypatch.setenv(_reduce.WORKERS_ENV, w)
        e = summarize(DirichletMartingale(1.5, "linear", 0.5), s, MonteCarlo(30_001, 99), Observable([0, 1, 2]))
        out.append((e.density.value.tobytes(), e.density.std_err.tobytes(), e.shannon.value, e.variance.std_err))
    assert out[0] == out[1] == out[2]


def test_chunked_moments_match_direct_statistics():
    gen = np.random.default_rng(0)
    data = gen.normal(size=(10_000, 3))

    def feats(idx):
        return data[idx.astype(int)]

    mean, se = _reduce.moments(feats, 10_000, workers=1)
    np.testing.assert_allclose(mean, data.mean(axis=0), rtol=1e-12)
    np.testing.assert_allclose(se, data.std(axis=0, ddof=1) / 100.0, rtol=1e-10)


@pytest.mark.parametrize("kappa", [1.0, 4.0, 16.0])
def test_dirichlet_cross_moment_oracle(kappa):
    p = np.array([0.1, 0.2, 0.3, 0.4])
    s = PureState(p, [0, 0, 0, 0])
    mc = cross_term_matrix(DirichletMartingale(kappa), s, MonteCarlo(100_000, 1))
    target = dirichlet_cross_moment(kappa, p)
    assert np.all(np.abs(mc.value - target) <= 4 * mc.std_err + 1e-15)

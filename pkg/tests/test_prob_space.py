import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from decohere.prob_space import (
    all_partitions,
    build_space,
    condition,
    expect,
    finest_partition,
    gram_independence,
    indicator,
    make_partition,
    random_variable,
    set_partitions,
    trivial_partition,
)
from decohere.quantum_state import shannon_entropy


@pytest.fixture
def four_atoms():
    space = build_space(4, [0.25] * 4)
    x = random_variable(space, [1.0, 1.0, 2.0, 2.0])
    return space, x, make_partition(space, [[0, 1, 2], [3]])


class TestBuildSpace:
    def test_single_atom(self):
        s = build_space(1, [1.0])
        assert s.size == 1 and s.weights[0] == 1.0

    def test_uniform(self):
        s = build_space(4, [0.25] * 4)
        np.testing.assert_array_equal(s.weights, [0.25] * 4)

    def test_indicator_expectation(self):
        s = build_space(3, [0.5, 0.3, 0.2])
        assert expect(s, indicator(s, [1])) == pytest.approx(0.3, abs=1e-15)

    def test_renormalises_within_tolerance(self):
        s = build_space(2, [0.5, 0.5 + 5e-13])
        assert math.fsum(s.weights) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize(
        "count,weights",
        [(0, []), (2, [1.2, -0.2]), (2, [0.5, 0.6]), (3, [0.5, 0.5])],
    )
    def test_rejects(self, count, weights):
        with pytest.raises(ValueError):
            build_space(count, weights)

    def test_weights_immutable(self):
        s = build_space(2, [0.5, 0.5])
        with pytest.raises(ValueError):
            s.weights[0] = 1.0


class TestExpect:
    def test_arithmetic_mean(self):
        s = build_space(2, [0.5, 0.5])
        assert expect(s, random_variable(s, [1.0, 3.0])) == 2.0

    def test_constant(self):
        s = build_space(3, [0.2, 0.3, 0.5])
        assert expect(s, random_variable(s, [4.5] * 3)) == 4.5

    def test_indicator_of_two_atoms(self):
        s = build_space(4, [0.25] * 4)
        assert expect(s, indicator(s, [0, 1])) == 0.5

    def test_complex(self):
        s = build_space(2, [0.5, 0.5])
        assert expect(s, random_variable(s, [1j, 1.0])) == 0.5 + 0.5j

    def test_other_space_rejected(self):
        a, b = build_space(2, [0.5, 0.5]), build_space(2, [0.3, 0.7])
        with pytest.raises(ValueError):
            expect(a, random_variable(b, [1.0, 2.0]))


class TestCondition:
    def test_trivial_partition_gives_constants(self, four_atoms):
        space, x, _ = four_atoms
        pis = condition(space, x, trivial_partition(space))
        for rv, p in zip(pis, [0.5, 0.5]):
            np.testing.assert_array_equal(rv.values, [p] * 4)

    def test_finest_partition_gives_indicators(self, four_atoms):
        space, x, _ = four_atoms
        pis = condition(space, x, finest_partition(space))
        np.testing.assert_array_equal(pis[0].values, [1, 1, 0, 0])
        np.testing.assert_array_equal(pis[1].values, [0, 0, 1, 1])

    def test_four_atom_example(self, four_atoms):
        space, x, part = four_atoms
        pi1, pi2 = condition(space, x, part)
        np.testing.assert_allclose(pi1.values, [2 / 3, 2 / 3, 2 / 3, 0], atol=1e-15)
        np.testing.assert_allclose(pi2.values, [1 / 3, 1 / 3, 1 / 3, 1], atol=1e-15)
        assert expect(space, pi1) == pytest.approx(0.5, abs=1e-15)

    def test_zero_probability_level_rejected(self):
        space = build_space(3, [0.5, 0.5, 0.0])
        x = random_variable(space, [0.0, 0.0, 1.0])
        with pytest.raises(ValueError, match="zero probability"):
            condition(space, x, trivial_partition(space))

    def test_invalid_partitions(self, four_atoms):
        space, _, _ = four_atoms
        for blocks in ([[0, 1], [1, 2, 3]], [[0, 1]], [[0, 1, 2, 3], []]):
            with pytest.raises(ValueError):
                make_partition(space, blocks)
        zero = build_space(2, [1.0, 0.0])
        with pytest.raises(ValueError):
            make_partition(zero, [[0], [1]])


@st.composite
def conditioned(draw):
    m = draw(st.integers(2, 7))
    raw = draw(st.lists(st.floats(0.01, 1.0), min_size=m, max_size=m))
    w = np.array(raw) / sum(raw)
    n = draw(st.integers(2, min(m, 4)))
    x = list(range(n)) + draw(st.lists(st.integers(0, n - 1), min_size=m - n, max_size=m - n))
    blocks = draw(st.sampled_from(list(set_partitions(range(m)))))
    space = build_space(m, w / math.fsum(w))
    return space, random_variable(space, np.array(x, dtype=float)), make_partition(space, blocks)


@settings(max_examples=300, deadline=None)
@given(conditioned())
def test_tower_property_and_normalisation(case):
    space, x, part = case
    pis = condition(space, x, part)
    p = [math.fsum(space.weights[x.values == lv]) for lv in range(len(pis))]
    for rv, pk in zip(pis, p):
        assert abs(expect(space, rv) - pk) <= 1e-14
    total = np.sum([rv.values for rv in pis], axis=0)
    np.testing.assert_allclose(total, 1.0, atol=1e-14)
    # block-constant
    for b in part.blocks:
        for rv in pis:
            assert np.ptp(rv.values[list(b)]) == 0.0


def _block_entropy(space, x, part):
    pis = np.array([rv.values for rv in condition(space, x, part)])
    return math.fsum(
        math.fsum(space.weights[list(b)]) * shannon_entropy(pis[:, b[0]]) for b in part.blocks
    )


@pytest.mark.parametrize("m", [2, 3, 4, 5, 6])
def test_refinement_never_increases_expected_entropy(m):
    gen = np.random.default_rng(m)
    w = gen.uniform(0.1, 1.0, m)
    space = build_space(m, w / w.sum())
    x = random_variable(space, np.arange(m) % 3 if m >= 3 else np.arange(m) % 2)
    parts = list(all_partitions(space))
    h = [_block_entropy(space, x, q) for q in parts]
    checked = 0
    for i, fine in enumerate(parts):
        for j, coarse in enumerate(parts):
            if i != j and fine.refines(coarse):
                assert h[i] <= h[j] + 1e-12
                checked += 1
    assert checked > 0


class TestGramIndependence:
    def test_constant_pis_dependent(self):
        space = build_space(3, [0.2, 0.3, 0.5])
        pis = [random_variable(space, [0.3] * 3), random_variable(space, [0.7] * 3)]
        independent, gram = gram_independence(space, pis)
        assert not independent
        # lam = (p2, -p1) annihilates the pair
        lam = np.array([0.7, -0.3])
        assert abs(lam @ gram @ lam) < 1e-15

    def test_indicators_independent_with_diagonal_gram(self):
        space = build_space(3, [0.2, 0.3, 0.5])
        x = random_variable(space, [0.0, 1.0, 2.0])
        pis = condition(space, x, finest_partition(space))
        independent, gram = gram_independence(space, pis)
        assert independent
        np.testing.assert_allclose(gram, np.diag([0.2, 0.3, 0.5]), atol=1e-16)

    def test_four_atom_example_full_rank(self, four_atoms):
        space, x, part = four_atoms
        independent, gram = gram_independence(space, condition(space, x, part))
        assert independent
        # direct summation: E[pi1^2] = 3/4 * 4/9, E[pi1 pi2] = 3/4 * 2/9, E[pi2^2] = 3/4 / 9 + 1/4
        np.testing.assert_allclose(gram, [[1 / 3, 1 / 6], [1 / 6, 1 / 3]], atol=1e-15)

    @pytest.mark.parametrize("tol", [1e-12, 1e-10, 1e-6, 0.1])
    def test_dependent_set_rejected_at_every_tolerance(self, tol):
        space = build_space(4, [0.1, 0.2, 0.3, 0.4])
        a = random_variable(space, [1.0, 0.0, 2.0, 1.0])
        b = random_variable(space, [0.0, 1.0, 1.0, 3.0])
        c = random_variable(space, 2.0 * a.values - 3.0 * b.values)
        assert not gram_independence(space, [a, b, c], tol)[0]

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            gram_independence(build_space(1, [1.0]), [])


def test_set_partitions_bell_numbers():
    assert [len(list(set_partitions(range(k)))) for k in range(7)] == [1, 1, 2, 5, 15, 52, 203]


def test_refines():
    space = build_space(4, [0.25] * 4)
    fine = make_partition(space, [[0], [1, 2], [3]])
    coarse = make_partition(space, [[0, 3], [1, 2]])
    assert fine.refines(coarse) and not coarse.refines(fine)
    assert finest_partition(space).refines(fine) and fine.refines(trivial_partition(space))

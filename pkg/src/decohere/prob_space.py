"""Finite probability spaces, partitions and conditional probabilities.

A sigma-algebra on a finite set is always generated by a partition, so
conditioning on an information set reduces to averaging over the blocks of a
partition. Everything here is exact summation; nothing is sampled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

WEIGHT_TOL = 1e-12
DEFAULT_INDEPENDENCE_TOL = 1e-10


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FiniteProbabilitySpace:
    atoms: tuple
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if len(self.atoms) == 0:
            raise ValueError("a probability space needs at least one atom")
        if w.shape != (len(self.atoms),):
            raise ValueError(f"expected {len(self.atoms)} weights, got shape {w.shape}")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and nonnegative")
        if abs(math.fsum(w) - 1.0) > WEIGHT_TOL:
            raise ValueError(f"weights sum to {math.fsum(w)!r}, not 1")
        object.__setattr__(self, "weights", _frozen(w.copy()))

    @property
    def size(self) -> int:
        return len(self.atoms)

    def same_as(self, other: "FiniteProbabilitySpace") -> bool:
        return self is other or (
            self.atoms == other.atoms and np.array_equal(self.weights, other.weights)
        )


@dataclass(frozen=True, eq=False)
class RandomVariable:
    space: FiniteProbabilitySpace
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.dtype.kind not in "fc":
            v = v.astype(np.float64)
        if v.shape != (self.space.size,):
            raise ValueError(
                f"random variable has {v.size} values for {self.space.size} atoms"
            )
        object.__setattr__(self, "values", _frozen(v.copy()))

    def __mul__(self, other: "RandomVariable") -> "RandomVariable":
        _check_same_space(self.space, other.space)
        return RandomVariable(self.space, self.values * other.values)


@dataclass(frozen=True, eq=False)
class Partition:
    """Disjoint nonempty blocks of atom indices covering a space."""

    space: FiniteProbabilitySpace
    blocks: tuple

    def __post_init__(self):
        blocks = tuple(tuple(sorted(int(a) for a in b)) for b in self.blocks)
        seen: set[int] = set()
        for b in blocks:
            if not b:
                raise ValueError("partition blocks must be nonempty")
            if seen.intersection(b):
                raise ValueError("partition blocks overlap")
            seen.update(b)
        if seen != set(range(self.space.size)):
            raise ValueError("partition blocks do not cover the atom set")
        for b in blocks:
            if math.fsum(self.space.weights[list(b)]) <= 0.0:
                raise ValueError(f"block {b} has zero probability")
        object.__setattr__(self, "blocks", blocks)

    def block_of(self) -> np.ndarray:
        """Block index of every atom."""
        out = np.empty(self.space.size, dtype=np.intp)
        for k, b in enumerate(self.blocks):
            out[list(b)] = k
        return out

    def refines(self, other: "Partition") -> bool:
        """True when every block of ``self`` sits inside a block of ``other``."""
        owner = other.block_of()
        return all(len({owner[a] for a in b}) == 1 for b in self.blocks)


def _check_same_space(a: FiniteProbabilitySpace, b: FiniteProbabilitySpace) -> None:
    if not a.same_as(b):
        raise ValueError("random variable belongs to a different probability space")


def build_space(atom_count: int, weights: Sequence[float]) -> FiniteProbabilitySpace:
    """Validated space on atoms ``0..atom_count-1``; weights renormalised to sum 1."""
    if atom_count < 1:
        raise ValueError("a probability space needs at least one atom")
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (atom_count,):
        raise ValueError(f"expected {atom_count} weights, got {w.size}")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and nonnegative")
    total = math.fsum(w)
    if abs(total - 1.0) > WEIGHT_TOL:
        raise ValueError(f"weights sum to {total!r}, not 1")
    return FiniteProbabilitySpace(tuple(range(atom_count)), w / total)


def random_variable(space: FiniteProbabilitySpace, values) -> RandomVariable:
    return RandomVariable(space, np.asarray(values))


def indicator(space: FiniteProbabilitySpace, atoms) -> RandomVariable:
    v = np.zeros(space.size)
    v[list(atoms)] = 1.0
    return RandomVariable(space, v)


def make_partition(space: FiniteProbabilitySpace, blocks) -> Partition:
    return Partition(space, tuple(blocks))


def trivial_partition(space: FiniteProbabilitySpace) -> Partition:
    return Partition(space, (tuple(range(space.size)),))


def finest_partition(space: FiniteProbabilitySpace) -> Partition:
    return Partition(space, tuple((a,) for a in range(space.size)))


def _weighted_sum(weights: np.ndarray, values: np.ndarray):
    order = np.argsort(-weights, kind="stable")
    terms = weights[order] * values[order]
    if np.iscomplexobj(terms):
        return complex(math.fsum(terms.real), math.fsum(terms.imag))
    return math.fsum(terms)


def expect(space: FiniteProbabilitySpace, rv: RandomVariable):
    """Exact expectation, summed in descending-weight order."""
    _check_same_space(space, rv.space)
    return _weighted_sum(space.weights, rv.values)


def levels(x: RandomVariable) -> np.ndarray:
    """Distinct values of ``x`` in ascending order; level ``i`` is basis index ``i``."""
    if np.iscomplexobj(x.values):
        raise ValueError("the measured variable must be real-valued")
    return np.unique(x.values)


def condition(
    space: FiniteProbabilitySpace, x_values: RandomVariable, partition: Partition
) -> list[RandomVariable]:
    """Conditional probabilities ``P(X = x_i | partition)`` as random variables.

    Each returned variable is constant on the blocks of ``partition``.
    """
    _check_same_space(space, x_values.space)
    if not partition.space.same_as(space):
        raise ValueError("partition belongs to a different probability space")
    lv = levels(x_values)
    idx = np.searchsorted(lv, x_values.values)
    w = space.weights
    for i in range(lv.size):
        if math.fsum(w[idx == i]) <= 0.0:
            raise ValueError(f"level {lv[i]!r} of X has zero probability")

    pis = np.zeros((lv.size, space.size))
    for b in partition.blocks:
        b = list(b)
        mass = [math.fsum(w[b][idx[b] == i]) for i in range(lv.size)]
        total = math.fsum(mass)
        for i in range(lv.size):
            pis[i, b] = mass[i] / total
    return [RandomVariable(space, row) for row in pis]


def gram_independence(
    space: FiniteProbabilitySpace,
    rvs: Sequence[RandomVariable],
    tol: float = DEFAULT_INDEPENDENCE_TOL,
) -> tuple[bool, np.ndarray]:
    """Decide linear independence of real random variables via their Gram matrix.

    ``G[i, j] = E[rv_i * rv_j]``; the variables are independent when the
    smallest eigenvalue of ``G`` exceeds ``tol`` times the largest.
    """
    if len(rvs) == 0:
        raise ValueError("need at least one random variable")
    for rv in rvs:
        _check_same_space(space, rv.space)
        if np.iscomplexobj(rv.values):
            raise ValueError("gram_independence needs real-valued random variables")
    m = len(rvs)
    gram = np.empty((m, m))
    for i in range(m):
        for j in range(i, m):
            gram[i, j] = gram[j, i] = _weighted_sum(
                space.weights, rvs[i].values * rvs[j].values
            )
    eig = np.linalg.eigvalsh(gram)
    independent = bool(eig[-1] > 0.0 and eig[0] > tol * eig[-1])
    return independent, gram


def set_partitions(items: Sequence[int]) -> Iterator[list[list[int]]]:
    """All set partitions of ``items`` (Bell-number many)."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for sub in set_partitions(rest):
        yield [[first]] + sub
        for k in range(len(sub)):
            yield sub[:k] + [[first] + sub[k]] + sub[k + 1 :]


def all_partitions(space: FiniteProbabilitySpace) -> Iterator[Partition]:
    for blocks in set_partitions(range(space.size)):
        if all(math.fsum(space.weights[b]) > 0.0 for b in blocks):
            yield Partition(space, tuple(blocks))

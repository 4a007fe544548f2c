"""Estimation modes shared by the unravelling, ensemble and verifier modules."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Exact:
    """Enumerate the law (or use a closed form); no sampling."""

    def describe(self) -> dict:
        return {"kind": "exact"}


@dataclass(frozen=True)
class MonteCarlo:
    trials: int
    seed: int = 0

    def __post_init__(self):
        if self.trials < 2:
            raise ValueError("Monte Carlo needs at least 2 trials")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def describe(self) -> dict:
        return {"kind": "monte_carlo", "trials": self.trials, "seed": self.seed}


@dataclass(frozen=True)
class Statistical:
    """Monte Carlo repeated over several seeds; a check passes only if every seed does."""

    trials: int
    seeds: tuple = (0, 1, 2)

    def __post_init__(self):
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.seeds:
            raise ValueError("need at least one seed")
        for s in self.seeds:
            MonteCarlo(self.trials, s)

    def runs(self) -> list[MonteCarlo]:
        return [MonteCarlo(self.trials, s) for s in self.seeds]

    def describe(self) -> dict:
        return {"kind": "statistical", "trials": self.trials, "seeds": list(self.seeds)}

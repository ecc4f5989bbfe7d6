"""Sampling strings of Bell pairs and running parity-measurement protocols on them.

Pair indices are 0-based throughout. The cascade measures pairs 0, 1, ...
in order; before pair i is measured every later pair is folded onto it by
BCNOT, so its measured class is the parity of the suffix i..n-1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, NamedTuple, Sequence

import numpy as np

from .bellcore import ALL_LABELS, BellDiagonalDist, BellLabel
from .errors import ConsistencyError, ValidationError
from .pairalgebra import (
    PairState,
    RawOutcome,
    SectorTracker,
    bcnot_labels,
    mask_indices,
    measure_pair_computational,
)
from .seeding import make_rng

Strategy = Literal["cascade", "random_subset"]
STRATEGIES = ("cascade", "random_subset")


@dataclass(frozen=True)
class PairString:
    pairs: tuple[PairState, ...]

    def __post_init__(self):
        if len(self.pairs) < 1:
            raise ValidationError("a pair string needs at least one pair")

    @classmethod
    def from_labels(cls, labels: Sequence[BellLabel]) -> "PairString":
        return cls(tuple(PairState(label) for label in labels))

    @property
    def n(self) -> int:
        return len(self.pairs)

    @property
    def labels(self) -> tuple[BellLabel, ...]:
        return tuple(p.label for p in self.pairs)

    @property
    def alive_count(self) -> int:
        return sum(p.alive for p in self.pairs)


class Step(NamedTuple):
    target: int
    sources: tuple[int, ...]


@dataclass(frozen=True)
class ProtocolPlan:
    strategy: Strategy
    n: int
    budget: int
    steps: tuple[Step, ...]
    seed: int | None = None

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValidationError(f"unknown strategy {self.strategy!r}")
        _check_budget(self.n, self.budget)
        if len(self.steps) != self.budget:
            raise ValidationError("plan must have exactly `budget` steps")
        targets = [s.target for s in self.steps]
        if len(set(targets)) != len(targets):
            raise ValidationError("step targets must be distinct")
        for step in self.steps:
            if not 0 <= step.target < self.n:
                raise ValidationError(f"target {step.target} out of range")
            if step.target in step.sources:
                raise ValidationError(f"target {step.target} appears in its own source set")
            if any(not 0 <= s < self.n for s in step.sources):
                raise ValidationError(f"source index out of range in {step}")


@dataclass(frozen=True)
class MeasurementEvent:
    """One destructive measurement.

    ``observable`` lists the pairs whose *initial* parity bits XOR to
    ``outcome.parity_class``.
    """

    step: int
    target: int
    observable: tuple[int, ...]
    outcome: RawOutcome

    def __post_init__(self):
        object.__setattr__(self, "observable", tuple(sorted(set(self.observable))))

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "target": self.target,
            "observable": list(self.observable),
            "outcome": {
                "alice_bit": self.outcome.alice_bit,
                "bob_bit": self.outcome.bob_bit,
                "parity_class": self.outcome.parity_class,
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MeasurementEvent":
        try:
            out = data["outcome"]
            outcome = RawOutcome(int(out["alice_bit"]), int(out["bob_bit"]), int(out["parity_class"]))
            return cls(int(data["step"]), int(data["target"]),
                       tuple(int(i) for i in data["observable"]), outcome)
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed event record: {exc!r}") from exc


def _check_budget(n: int, budget: int) -> None:
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    if not 1 <= budget <= n:
        raise ValidationError(f"budget must be in [1, n={n}], got {budget}")


def sample_string(dist: BellDiagonalDist, n: int, rng: np.random.Generator) -> PairString:
    """Draw n labels i.i.d. from dist."""
    if not isinstance(dist, BellDiagonalDist):
        raise ValidationError(f"expected BellDiagonalDist, got {type(dist).__name__}")
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    draws = rng.choice(4, size=n, p=np.asarray(dist.probs))
    return PairString.from_labels([ALL_LABELS[i] for i in draws])


def plan_cascade(n: int, budget: int) -> ProtocolPlan:
    _check_budget(n, budget)
    steps = tuple(Step(i, tuple(range(i + 1, n))) for i in range(budget))
    return ProtocolPlan("cascade", n, budget, steps)


def plan_random_subsets(n: int, budget: int, rng: np.random.Generator | int) -> ProtocolPlan:
    """Random parity checks: each step measures a fresh random target after
    folding in a uniformly random subset of the other unmeasured pairs.

    ``rng`` may be a seed, in which case it is recorded on the plan.
    """
    _check_budget(n, budget)
    seed = None
    if not isinstance(rng, np.random.Generator):
        seed = int(rng)
        rng = make_rng(seed)
    remaining = list(range(n))
    steps = []
    for _ in range(budget):
        target = remaining.pop(int(rng.integers(len(remaining))))
        picks = rng.integers(0, 2, size=len(remaining))
        steps.append(Step(target, tuple(j for j, keep in zip(remaining, picks) if keep)))
    return ProtocolPlan("random_subset", n, budget, tuple(steps), seed)


def execute(
    plan: ProtocolPlan, string: PairString, rng: np.random.Generator
) -> tuple[list[MeasurementEvent], list[tuple[int, BellLabel]]]:
    """Apply each step's BCNOTs, then measure its target.

    Sources that are already dead are skipped. Every event's observable is
    read off a symbolic tracker and checked against the initial string.
    """
    if plan.n != string.n:
        raise ValidationError(f"plan is for n={plan.n} but string has {string.n} pairs")
    if string.alive_count != string.n:
        raise ValidationError("execute needs a string with every pair alive")

    initial = string.labels
    labels = list(initial)
    alive = [True] * string.n
    tracker = SectorTracker(string.n)
    events = []
    for k, step in enumerate(plan.steps):
        t = step.target
        for s in step.sources:
            if not alive[s]:
                continue
            labels[s], labels[t] = bcnot_labels(labels[s], labels[t])
            tracker.apply_bcnot(s, t)
        outcome, _ = measure_pair_computational(PairState(labels[t], alive[t]), rng)
        alive[t] = False
        observable = mask_indices(tracker.parity_masks[t])
        expected = 0
        for i in observable:
            expected ^= initial[i].parity_bit
        if expected != outcome.parity_class:
            raise ConsistencyError(f"step {k}: outcome disagrees with tracked observable")
        events.append(MeasurementEvent(k, t, tuple(observable), outcome))

    survivors = [(i, labels[i]) for i in range(string.n) if alive[i]]
    return events, survivors

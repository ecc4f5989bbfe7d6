"""Closed-form quantities for Bell-diagonal states.

All entropies are in bits (log base 2) and entanglement in ebits.
Probability vectors are ordered (Phi+, Phi-, Psi+, Psi-).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

from .errors import DomainError, ValidationError

PROB_ATOL = 1e-12


class BellLabel(NamedTuple):
    """Two-bit tag of a Bell state.

    ``parity_bit`` is 0 for the Phi class (support on |00>, |11>) and 1 for
    the Psi class; ``phase_bit`` is 0 for "+" and 1 for "-".
    """

    phase_bit: int
    parity_bit: int

    @property
    def index(self) -> int:
        """Position in the (Phi+, Phi-, Psi+, Psi-) ordering."""
        return self.phase_bit + 2 * self.parity_bit

    @classmethod
    def from_index(cls, index: int) -> "BellLabel":
        if index not in (0, 1, 2, 3):
            raise ValidationError(f"Bell label index must be 0..3, got {index!r}")
        return ALL_LABELS[index]

    @property
    def name(self) -> str:
        return LABEL_NAMES[self.index]

    def __repr__(self) -> str:
        return f"BellLabel({self.name})"


PHI_PLUS = BellLabel(0, 0)
PHI_MINUS = BellLabel(1, 0)
PSI_PLUS = BellLabel(0, 1)
PSI_MINUS = BellLabel(1, 1)
ALL_LABELS = (PHI_PLUS, PHI_MINUS, PSI_PLUS, PSI_MINUS)
LABEL_NAMES = ("phi+", "phi-", "psi+", "psi-")


def xlog2x(x: float) -> float:
    """x * log2(x), continuous extension 0 at x = 0."""
    return float(x * math.log2(x)) if x > 0.0 else 0.0


def shannon_bits(probs: Iterable[float]) -> float:
    return -math.fsum(xlog2x(p) for p in probs) + 0.0


def binary_entropy(p: float) -> float:
    """H2(p) in bits."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"binary entropy needs p in [0, 1], got {p}")
    return shannon_bits((p, 1.0 - p))


@dataclass(frozen=True)
class BellDiagonalDist:
    """Mixture weights (p1, p2, p3, p4) over (Phi+, Phi-, Psi+, Psi-)."""

    probs: tuple[float, float, float, float]

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probs)
        if len(probs) != 4:
            raise ValidationError(f"expected 4 probabilities, got {len(probs)}")
        if not all(math.isfinite(p) for p in probs):
            raise ValidationError(f"probabilities must be finite, got {probs}")
        if any(p < 0.0 for p in probs):
            raise ValidationError(f"probabilities must be non-negative, got {probs}")
        total = math.fsum(probs)
        if abs(total - 1.0) > PROB_ATOL:
            raise ValidationError(
                f"probabilities must sum to 1 within {PROB_ATOL:g}, got sum {total!r}"
            )
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_values(cls, values: Sequence[float], renormalize: bool = False) -> "BellDiagonalDist":
        """Build from any 4-sequence; rescale to unit sum only when asked."""
        values = tuple(float(v) for v in values)
        if renormalize:
            if len(values) != 4 or any(v < 0 or not math.isfinite(v) for v in values):
                raise ValidationError(f"cannot renormalize {values}")
            total = math.fsum(values)
            if total <= 0.0:
                raise ValidationError("cannot renormalize a zero vector")
            values = tuple(v / total for v in values)
        return cls(values)

    def __getitem__(self, label: BellLabel | int) -> float:
        index = label.index if isinstance(label, BellLabel) else label
        return self.probs[index]

    @property
    def psi_mass(self) -> float:
        """Probability of the Psi class, p3 + p4 (parity bit 1)."""
        return self.probs[2] + self.probs[3]

    @property
    def phi_mass(self) -> float:
        return self.probs[0] + self.probs[1]


@dataclass(frozen=True)
class GroupPartition:
    blocks: tuple[frozenset[BellLabel], ...]

    def __post_init__(self):
        blocks = tuple(frozenset(b) for b in self.blocks)
        seen: set[BellLabel] = set()
        for block in blocks:
            if not block:
                raise ValidationError("partition blocks must be non-empty")
            if not block <= set(ALL_LABELS):
                raise ValidationError(f"unknown labels in block {set(block)}")
            if seen & block:
                raise ValidationError("partition blocks must be disjoint")
            seen |= block
        if seen != set(ALL_LABELS):
            raise ValidationError("partition must cover all four Bell labels")
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def of(cls, *blocks: Iterable[BellLabel]) -> "GroupPartition":
        return cls(tuple(frozenset(b) for b in blocks))


# Computational-basis measurement separates Phi from Psi.
PARITY_SPLIT = GroupPartition.of({PHI_PLUS, PHI_MINUS}, {PSI_PLUS, PSI_MINUS})
PHASE_SPLIT = GroupPartition.of({PHI_PLUS, PSI_PLUS}, {PHI_MINUS, PSI_MINUS})
MIXED_SPLIT = GroupPartition.of({PHI_PLUS, PSI_MINUS}, {PHI_MINUS, PSI_PLUS})
TWO_TWO_SPLITS = (PARITY_SPLIT, PHASE_SPLIT, MIXED_SPLIT)


@dataclass(frozen=True)
class EdInputs:
    entropy_S: float
    mdi_I: float
    residual_E: float

    def __post_init__(self):
        if self.entropy_S < 0:
            raise ValidationError(f"entropy_S must be >= 0, got {self.entropy_S}")
        if self.mdi_I == 0:
            raise DomainError("E_D relation is undefined for zero distinguishing information")
        if self.mdi_I < 0:
            raise ValidationError(f"mdi_I must be > 0, got {self.mdi_I}")
        if self.residual_E < 0:
            raise ValidationError(f"residual_E must be >= 0, got {self.residual_E}")


def _check_dist(dist) -> BellDiagonalDist:
    if not isinstance(dist, BellDiagonalDist):
        raise ValidationError(f"expected BellDiagonalDist, got {type(dist).__name__}")
    return dist


def entropy_bits(dist: BellDiagonalDist) -> float:
    return shannon_bits(_check_dist(dist).probs)


def grouping_di(dist: BellDiagonalDist, partition: GroupPartition) -> float:
    """Entropy of the block distribution induced by a grouping of labels."""
    _check_dist(dist)
    if not isinstance(partition, GroupPartition):
        raise ValidationError(f"expected GroupPartition, got {type(partition).__name__}")
    return shannon_bits(math.fsum(dist[label] for label in block) for block in partition.blocks)


def computational_basis_di(dist: BellDiagonalDist) -> float:
    _check_dist(dist)
    return shannon_bits((dist.phi_mass, dist.psi_mass))


def single_copy_mdi(dist: BellDiagonalDist) -> float:
    """Best distinguishing information over the three 2+2 groupings.

    Only 2+2 groupings are considered; a single copy can at most be sorted
    into two groups of two Bell states.
    """
    return max(grouping_di(dist, p) for p in TWO_TWO_SPLITS)


def ed_from_di(inputs: EdInputs) -> float:
    """max(0, (1 - S / I) * E)."""
    if not isinstance(inputs, EdInputs):
        raise ValidationError(f"expected EdInputs, got {type(inputs).__name__}")
    return max(0.0, (1.0 - inputs.entropy_S / inputs.mdi_I) * inputs.residual_E)


def hashing_yield(dist: BellDiagonalDist) -> float:
    return ed_from_di(EdInputs(entropy_bits(dist), 1.0, 1.0))


# Absorbs float noise in n*S/I so exact ratios (e.g. 100 * 0.5) are not rounded up.
_BUDGET_SLACK = 1e-9


def measurement_budget(n: int, S: float, I_dmax: float) -> int:
    """Smallest number of measured pairs k with n*S <= k*I_dmax, capped at n."""
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    if I_dmax == 0:
        raise DomainError("measurement budget is undefined for zero distinguishing information")
    if I_dmax < 0 or S < 0:
        raise ValidationError("S must be >= 0 and I_dmax > 0")
    ratio = S / I_dmax
    if ratio >= 1.0:
        return n
    return min(n, max(0, math.ceil(n * ratio - _BUDGET_SLACK)))

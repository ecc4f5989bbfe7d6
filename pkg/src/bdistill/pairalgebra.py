"""Bell-label dynamics under bilateral CNOT and computational-basis measurement.

A label is a pair of GF(2) coordinates. Under BCNOT the parity (Phi/Psi)
coordinate flows source -> target and the phase coordinate flows
target -> source, so the two sectors never mix. ``dense_bcnot_oracle``
re-derives this table from 16-amplitude state vectors.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .bellcore import ALL_LABELS, BellLabel
from .errors import ConsistencyError, UsageError, ValidationError

_SQRT_HALF = 1.0 / np.sqrt(2.0)


class PairState(NamedTuple):
    label: BellLabel
    alive: bool = True


@dataclass(frozen=True)
class RawOutcome:
    """Alice's and Bob's computational-basis bits for one measured pair."""

    alice_bit: int
    bob_bit: int
    parity_class: int

    def __post_init__(self):
        for bit in (self.alice_bit, self.bob_bit, self.parity_class):
            if bit not in (0, 1):
                raise ValidationError(f"outcome bits must be 0 or 1, got {bit!r}")
        if self.parity_class != self.alice_bit ^ self.bob_bit:
            raise ValidationError(
                f"parity_class {self.parity_class} != alice_bit XOR bob_bit "
                f"({self.alice_bit} ^ {self.bob_bit})"
            )

    @classmethod
    def from_bits(cls, alice_bit: int, bob_bit: int) -> "RawOutcome":
        return cls(alice_bit, bob_bit, alice_bit ^ bob_bit)


def bcnot_labels(source: BellLabel, target: BellLabel) -> tuple[BellLabel, BellLabel]:
    return (
        BellLabel(source.phase_bit ^ target.phase_bit, source.parity_bit),
        BellLabel(target.phase_bit, target.parity_bit ^ source.parity_bit),
    )


def measure_pair_computational(
    pair: PairState | BellLabel, rng: np.random.Generator
) -> tuple[RawOutcome, PairState]:
    """Project both halves onto |0>/|1>; returns the outcome and the dead pair.

    Only the parity class is learned. The raw bits are a fair coin over the
    two strings consistent with it.
    """
    if isinstance(pair, BellLabel):
        pair = PairState(pair)
    if not pair.alive:
        raise UsageError("cannot measure a pair that was already measured")
    alice = int(rng.integers(2))
    outcome = RawOutcome.from_bits(alice, alice ^ pair.label.parity_bit)
    return outcome, PairState(pair.label, alive=False)


def dense_bell_vector(label: BellLabel) -> np.ndarray:
    """Amplitudes over |00>, |01>, |10>, |11> (Alice's qubit first)."""
    vec = np.zeros(4)
    sign = -1.0 if label.phase_bit else 1.0
    if label.parity_bit == 0:
        vec[0b00], vec[0b11] = _SQRT_HALF, sign * _SQRT_HALF
    else:
        vec[0b01], vec[0b10] = _SQRT_HALF, sign * _SQRT_HALF
    return vec


def _bilateral_cnot_permutation() -> np.ndarray:
    # Qubit order (A_s, B_s, A_t, B_t), A_s most significant.
    perm = np.empty(16, dtype=np.intp)
    for a_s, b_s, a_t, b_t in itertools.product((0, 1), repeat=4):
        src = (a_s << 3) | (b_s << 2) | (a_t << 1) | b_t
        dst = (a_s << 3) | (b_s << 2) | ((a_t ^ a_s) << 1) | (b_t ^ b_s)
        perm[dst] = src
    return perm


_BCNOT_PERM = _bilateral_cnot_permutation()
_PRODUCT_BASIS = {
    (s, t): np.kron(dense_bell_vector(s), dense_bell_vector(t))
    for s in ALL_LABELS
    for t in ALL_LABELS
}


def dense_bcnot_oracle(source: BellLabel, target: BellLabel) -> tuple[BellLabel, BellLabel]:
    state = np.kron(dense_bell_vector(source), dense_bell_vector(target))[_BCNOT_PERM]
    for pair, basis in _PRODUCT_BASIS.items():
        # Global phase is quotiented out: only |<basis|state>| matters.
        if abs(abs(basis @ state) - 1.0) < 1e-9:
            return pair
    raise ConsistencyError(f"BCNOT of {source}, {target} left the Bell product basis")


class SectorTracker:
    """Symbolic GF(2) bookkeeping of labels under a sequence of BCNOTs.

    ``parity_masks[i]`` is a bitmask over the *initial* parity bits whose XOR
    equals pair i's current parity bit; ``phase_masks[i]`` does the same for
    phase bits.
    """

    def __init__(self, n: int):
        self.parity_masks = [1 << i for i in range(n)]
        self.phase_masks = [1 << i for i in range(n)]

    def apply_bcnot(self, source: int, target: int) -> None:
        self.parity_masks[target] ^= self.parity_masks[source]
        self.phase_masks[source] ^= self.phase_masks[target]

    def parity_support(self, i: int) -> frozenset[int]:
        return mask_indices(self.parity_masks[i])

    def phase_support(self, i: int) -> frozenset[int]:
        return mask_indices(self.phase_masks[i])


def mask_indices(mask: int) -> frozenset[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return frozenset(out)

import itertools
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bdistill.bellcore import (
    ALL_LABELS,
    PARITY_SPLIT,
    PHI_MINUS,
    PHI_PLUS,
    PSI_MINUS,
    PSI_PLUS,
    BellDiagonalDist,
    BellLabel,
    EdInputs,
    GroupPartition,
    computational_basis_di,
    ed_from_di,
    entropy_bits,
    grouping_di,
    hashing_yield,
    measurement_budget,
    single_copy_mdi,
)
from bdistill.errors import DomainError, ValidationError

from conftest import dists, random_dist

mpmath.mp.dps = 40


def mp_entropy(probs):
    """High-precision Shannon entropy, used as the oracle."""
    return float(-mpmath.fsum(mpmath.mpf(p) * mpmath.log(mpmath.mpf(p), 2) for p in probs if p > 0))


def all_partitions(items):
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for sub in all_partitions(rest):
        yield [[first]] + sub
        for i in range(len(sub)):
            yield sub[:i] + [[first] + sub[i]] + sub[i + 1:]


ALL_PARTITIONS = [GroupPartition.of(*p) for p in all_partitions(list(ALL_LABELS))]


def test_partition_enumeration_is_complete():
    assert len(ALL_PARTITIONS) == 15  # Bell number B4


def test_labels():
    assert [l.index for l in ALL_LABELS] == [0, 1, 2, 3]
    assert PHI_MINUS == BellLabel(1, 0) and PSI_PLUS == BellLabel(0, 1)
    assert BellLabel.from_index(3) == PSI_MINUS
    with pytest.raises(ValidationError):
        BellLabel.from_index(4)


@pytest.mark.parametrize(
    "probs, expected",
    [((1, 0, 0, 0), 0.0), ((0.25, 0.25, 0.25, 0.25), 2.0), ((0.5, 0.25, 0.125, 0.125), None)],
)
def test_entropy_examples(probs, expected):
    if expected is None:
        expected = mp_entropy(probs)
        assert expected == pytest.approx(1.75, abs=1e-15)
    assert entropy_bits(BellDiagonalDist(probs)) == pytest.approx(expected, abs=1e-12)


@pytest.mark.parametrize(
    "probs",
    [(0.5, 0.5, 0.1, -0.1), (0.5, 0.3, 0.1, 0.0), (0.25, 0.25, 0.25), (math.nan, 0, 0, 1)],
)
def test_invalid_distributions_rejected(probs):
    with pytest.raises(ValidationError):
        BellDiagonalDist(probs)


def test_sum_tolerance_and_explicit_renormalize():
    BellDiagonalDist((0.5, 0.5 + 5e-13, 0, 0))
    with pytest.raises(ValidationError):
        BellDiagonalDist((0.5, 0.5 + 1e-10, 0, 0))
    d = BellDiagonalDist.from_values((2, 1, 1, 0), renormalize=True)
    assert d.probs == (0.5, 0.25, 0.25, 0.0)
    with pytest.raises(ValidationError):
        BellDiagonalDist.from_values((2, 1, 1, 0))


def test_grouping_di_examples():
    d = BellDiagonalDist((0.5, 0.3, 0.1, 0.1))
    assert grouping_di(d, PARITY_SPLIT) == pytest.approx(mp_entropy([0.8, 0.2]), abs=1e-12)
    assert grouping_di(d, PARITY_SPLIT) == pytest.approx(0.721928, abs=1e-6)
    assert grouping_di(d, GroupPartition.of(ALL_LABELS)) == 0.0
    uniform = BellDiagonalDist((0.25,) * 4)
    singletons = GroupPartition.of(*[[l] for l in ALL_LABELS])
    assert grouping_di(uniform, singletons) == pytest.approx(2.0, abs=1e-12)


@pytest.mark.parametrize(
    "blocks",
    [
        [[PHI_PLUS], [PHI_MINUS]],
        [[PHI_PLUS, PHI_MINUS], [PHI_MINUS, PSI_PLUS, PSI_MINUS]],
        [[PHI_PLUS, PHI_MINUS, PSI_PLUS, PSI_MINUS], []],
    ],
)
def test_invalid_partitions(blocks):
    with pytest.raises(ValidationError):
        GroupPartition.of(*blocks)


def test_computational_basis_di_examples():
    assert computational_basis_di(BellDiagonalDist((0.5, 0.5, 0, 0))) == 0.0
    assert computational_basis_di(BellDiagonalDist((0.25,) * 4)) == 1.0
    assert computational_basis_di(BellDiagonalDist((0.5, 0.3, 0.1, 0.1))) == pytest.approx(
        mp_entropy([0.8, 0.2]), abs=1e-12
    )


def brute_force_mdi(dist):
    best = 0.0
    for pair in itertools.combinations(range(4), 2):
        inside = sum(dist.probs[i] for i in pair)
        best = max(best, mp_entropy([inside, 1 - inside]))
    return best


@pytest.mark.parametrize(
    "probs, expected",
    [((0.25,) * 4, 1.0), ((1, 0, 0, 0), 0.0), ((0.4, 0.1, 0.4, 0.1), 1.0)],
)
def test_single_copy_mdi_examples(probs, expected):
    d = BellDiagonalDist(probs)
    assert single_copy_mdi(d) == pytest.approx(expected, abs=1e-12)
    assert single_copy_mdi(d) == pytest.approx(brute_force_mdi(d), abs=1e-12)


def test_mdi_partition_values_for_example():
    d = BellDiagonalDist((0.4, 0.1, 0.4, 0.1))
    phase_split = GroupPartition.of({PHI_PLUS, PSI_PLUS}, {PHI_MINUS, PSI_MINUS})
    assert grouping_di(d, phase_split) == pytest.approx(mp_entropy([0.8, 0.2]), abs=1e-12)
    assert grouping_di(d, PARITY_SPLIT) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("S, I, E, expected", [(0, 1, 1, 1.0), (1, 1, 1, 0.0), (2, 1, 1, 0.0)])
def test_ed_from_di_examples(S, I, E, expected):
    assert ed_from_di(EdInputs(S, I, E)) == expected


def test_ed_from_di_domain():
    with pytest.raises(DomainError):
        EdInputs(0.5, 0.0, 1.0)
    with pytest.raises(ValidationError):
        EdInputs(-0.1, 1.0, 1.0)


def test_hashing_yield_examples():
    assert hashing_yield(BellDiagonalDist((1, 0, 0, 0))) == 1.0
    assert hashing_yield(BellDiagonalDist((0.25,) * 4)) == 0.0
    expected = 1 - mp_entropy([0.9, 0.1])
    assert hashing_yield(BellDiagonalDist((0.9, 0.1, 0, 0))) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(0.531004, abs=1e-6)


def test_measurement_budget_examples():
    assert measurement_budget(100, 0.5, 1) == 50
    assert measurement_budget(100, 1.75, 1) == 100
    h = mp_entropy([0.9, 0.1])
    assert measurement_budget(24, h, 1) == math.ceil(24 * h) == 12
    with pytest.raises(DomainError):
        measurement_budget(10, 0.5, 0)


def test_measurement_budget_is_minimal():
    for n in range(1, 40):
        for S in (0.0, 0.1, 0.33, 0.5, 0.75, 0.99):
            k = measurement_budget(n, S, 1.0)
            assert n * S <= k + 1e-9
            assert k == 0 or n * S > k - 1


@given(dists())
def test_coarse_graining_chain(dist):
    S = entropy_bits(dist)
    assert -1e-12 <= S <= 2 + 1e-12
    for partition in ALL_PARTITIONS:
        assert -1e-12 <= grouping_di(dist, partition) <= S + 1e-12


@given(dists())
def test_mdi_capped_at_one_bit(dist):
    assert single_copy_mdi(dist) <= 1.0


def test_parity_split_matches_computational_basis(rng):
    for _ in range(1000):
        d = random_dist(rng)
        assert abs(grouping_di(d, PARITY_SPLIT) - computational_basis_di(d)) <= 1e-12


@given(
    st.floats(0, 3), st.floats(0, 3), st.floats(0.01, 2), st.floats(0, 2), st.floats(0, 2)
)
def test_ed_monotonicity(S1, S2, I, E1, E2):
    lo, hi = sorted((S1, S2))
    assert ed_from_di(EdInputs(hi, I, E1)) <= ed_from_di(EdInputs(lo, I, E1))
    e_lo, e_hi = sorted((E1, E2))
    assert ed_from_di(EdInputs(S1, I, e_lo)) <= ed_from_di(EdInputs(S1, I, e_hi))
    assert ed_from_di(EdInputs(0.0, I, E1)) == E1


@given(dists())
def test_hashing_yield_is_ed_relation(dist):
    assert hashing_yield(dist) == ed_from_di(EdInputs(entropy_bits(dist), 1.0, 1.0))

"""Exact Bayesian audit of measurement records.

Given the i.i.d. prior over Bell labels and a list of measurement events,
these functions condition the prior on every observed parity and report
how much was learned (per step and in total) and how much uncertainty is
left about the pairs that were never measured.

Residual quantities refer to the survivors' labels in the *original*
string. Events carry parity observables only, so the audit never needs
the plan that produced them.

Two routes compute the same report:

* ``exact_posterior`` enumerates all 4**n label strings.
* ``xsector_posterior`` enumerates only the 2**n parity strings and adds
  the phase uncertainty in closed form. Observables touch parity bits
  only and the prior is a product, so given a survivor's parity bit its
  phase bit keeps its prior conditional distribution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .bellcore import BellDiagonalDist, binary_entropy, shannon_bits
from .errors import CapacityError, DomainError, ValidationError
from .protocol import MeasurementEvent

DEFAULT_EXACT_CAP = 10
DEFAULT_XSECTOR_CAP = 24


@dataclass(frozen=True)
class PosteriorReport:
    survivors: tuple[int, ...]
    per_step_di: tuple[float, ...]
    cumulative_di: float
    residual_entropy: float
    parity_residual: float
    phase_residual: float
    # Aligned with ``survivors``; each entry is over (Phi+, Phi-, Psi+, Psi-).
    survivor_marginals: tuple[tuple[float, float, float, float], ...]

    def to_dict(self) -> dict:
        return {
            "survivors": list(self.survivors),
            "per_step_di": list(self.per_step_di),
            "cumulative_di": self.cumulative_di,
            "residual_entropy": self.residual_entropy,
            "parity_residual": self.parity_residual,
            "phase_residual": self.phase_residual,
            "survivor_marginals": [list(m) for m in self.survivor_marginals],
        }


def _coerce_events(events: Iterable[MeasurementEvent | dict]) -> list[MeasurementEvent]:
    out = []
    for k, ev in enumerate(events):
        if isinstance(ev, MeasurementEvent):
            out.append(ev)
            continue
        try:
            out.append(MeasurementEvent.from_dict(ev))
        except (ValidationError, ValueError, TypeError) as exc:
            raise ValidationError(f"event {k}: {exc}") from exc
    return out


def _validate_events(n: int, events: Sequence[MeasurementEvent]) -> tuple[int, ...]:
    """Check structural consistency and return the never-measured pair indices."""
    measured: set[int] = set()
    for k, ev in enumerate(events):
        if not 0 <= ev.target < n:
            raise ValidationError(f"event {k}: target {ev.target} out of range for n={n}")
        if ev.target in measured:
            raise ValidationError(f"event {k}: pair {ev.target} was already measured")
        if not ev.observable:
            raise ValidationError(f"event {k}: empty observable")
        if any(not 0 <= i < n for i in ev.observable):
            raise ValidationError(f"event {k}: observable index out of range for n={n}")
        if ev.target not in ev.observable:
            raise ValidationError(f"event {k}: observable must contain the measured pair")
        measured.add(ev.target)
    return tuple(i for i in range(n) if i not in measured)


def _check_inputs(dist, n: int, cap: int, route: str) -> None:
    if not isinstance(dist, BellDiagonalDist):
        raise ValidationError(f"expected BellDiagonalDist, got {type(dist).__name__}")
    if n < 1:
        raise ValidationError(f"n must be >= 1, got {n}")
    if n > cap:
        hint = "; use xsector_posterior for larger n" if route == "exact" else ""
        raise CapacityError(f"{route} enumeration capped at n={cap}, got n={n}{hint}")


def _product_prior(marginal: Sequence[float], n: int) -> np.ndarray:
    """Weights of all strings; pair i is digit i (least significant first)."""
    weights = np.ones(1)
    marginal = np.asarray(marginal, dtype=float)
    for _ in range(n):
        weights = np.concatenate([weights * p for p in marginal])
    return weights / weights.sum()


def _entropy_of_weights(weights: np.ndarray) -> float:
    total = weights.sum()
    p = weights[weights > 0] / total
    return max(0.0, float(-(p * np.log2(p)).sum()))


def _odd_parity(idx: np.ndarray, positions: Iterable[int]) -> np.ndarray:
    mask = 0
    for pos in positions:
        mask |= 1 << pos
    return (np.bitwise_count(idx & idx.dtype.type(mask)) & 1).astype(bool)


def _condition(idx, weights, events, bit_position):
    per_step = []
    for k, ev in enumerate(events):
        odd = _odd_parity(idx, (bit_position(i) for i in ev.observable))
        total = weights.sum()
        p_odd = float(np.sum(weights, where=odd)) / total
        per_step.append(binary_entropy(min(1.0, max(0.0, p_odd))))
        keep = odd if ev.outcome.parity_class else ~odd
        weights = np.where(keep, weights, 0.0)
        mass = weights.sum()
        if not mass > 0.0:
            raise ValidationError(
                f"event {k}: parity_class {ev.outcome.parity_class} on observable "
                f"{list(ev.observable)} has zero probability given the prior and earlier events"
            )
        weights /= mass
    return weights, per_step


def _pack_bits(idx: np.ndarray, positions: Sequence[int], width: int) -> np.ndarray:
    """Gather ``width``-bit fields at ``positions`` of idx into one compact key."""
    key = np.zeros_like(idx)
    field = (1 << width) - 1
    for j, pos in enumerate(positions):
        key |= ((idx >> pos) & field) << (width * j)
    return key


def exact_posterior(
    dist: BellDiagonalDist,
    n: int,
    events: Iterable[MeasurementEvent | dict],
    cap: int = DEFAULT_EXACT_CAP,
) -> PosteriorReport:
    _check_inputs(dist, n, cap, "exact")
    events = _coerce_events(events)
    survivors = _validate_events(n, events)

    idx = np.arange(4**n, dtype=np.uint32)
    weights = _product_prior(dist.probs, n)
    # Label of pair i is the base-4 digit i; its parity bit is the digit's high bit.
    weights, per_step = _condition(idx, weights, events, lambda i: 2 * i + 1)

    m = len(survivors)
    label_key = _pack_bits(idx, [2 * s for s in survivors], 2)
    residual = _entropy_of_weights(np.bincount(label_key, weights, minlength=4**m))
    parity_key = _pack_bits(idx, [2 * s + 1 for s in survivors], 1)
    parity_residual = _entropy_of_weights(np.bincount(parity_key, weights, minlength=2**m))
    marginals = []
    for s in survivors:
        counts = np.bincount((idx >> (2 * s)) & 3, weights, minlength=4)
        marginals.append(tuple(float(c) for c in counts / counts.sum()))

    return PosteriorReport(
        survivors=survivors,
        per_step_di=tuple(per_step),
        cumulative_di=math.fsum(per_step),
        residual_entropy=residual,
        parity_residual=parity_residual,
        phase_residual=max(0.0, residual - parity_residual),
        survivor_marginals=tuple(marginals),
    )


def _phase_entropy_given_class(dist: BellDiagonalDist) -> tuple[float, float]:
    """H(phase | parity class) for the Phi and Psi classes (0 for empty classes)."""
    out = []
    for a, b in ((dist.probs[0], dist.probs[1]), (dist.probs[2], dist.probs[3])):
        mass = a + b
        out.append(shannon_bits((a / mass, b / mass)) if mass > 0 else 0.0)
    return out[0], out[1]


def xsector_posterior(
    dist: BellDiagonalDist,
    n: int,
    events: Iterable[MeasurementEvent | dict],
    cap: int = DEFAULT_XSECTOR_CAP,
) -> PosteriorReport:
    _check_inputs(dist, n, cap, "xsector")
    events = _coerce_events(events)
    survivors = _validate_events(n, events)

    q = dist.psi_mass
    idx = np.arange(2**n, dtype=np.uint32)
    weights = _product_prior((1.0 - q, q), n)
    weights, per_step = _condition(idx, weights, events, lambda i: i)

    if survivors == tuple(range(n)):
        parity_key = idx
    else:
        parity_key = _pack_bits(idx, survivors, 1)
    parity_residual = _entropy_of_weights(np.bincount(parity_key, weights, minlength=2 ** len(survivors)))

    h_phi, h_psi = _phase_entropy_given_class(dist)
    p1, p2, p3, p4 = dist.probs
    phi_mass, psi_mass = p1 + p2, p3 + p4
    total = weights.sum()
    phase_residual = 0.0
    marginals = []
    for s in survivors:
        r = float(np.sum(weights, where=((idx >> s) & 1).astype(bool))) / total
        r = min(1.0, max(0.0, r))
        phase_residual += (1.0 - r) * h_phi + r * h_psi
        phi_part = (1.0 - r) / phi_mass if phi_mass > 0 else 0.0
        psi_part = r / psi_mass if psi_mass > 0 else 0.0
        marginals.append((phi_part * p1, phi_part * p2, psi_part * p3, psi_part * p4))
    phase_residual = float(phase_residual)

    return PosteriorReport(
        survivors=survivors,
        per_step_di=tuple(per_step),
        cumulative_di=math.fsum(per_step),
        residual_entropy=float(parity_residual + phase_residual),
        parity_residual=parity_residual,
        phase_residual=phase_residual,
        survivor_marginals=tuple(marginals),
    )


def tail_parity_residual_closed_form(q: float, m: int) -> float:
    """Entropy of m i.i.d. Bernoulli(q) bits once their XOR is known.

    m*H2(q) - H2((1 - (1 - 2q)**m) / 2).
    """
    if not 0.0 <= q <= 1.0:
        raise DomainError(f"q must be in [0, 1], got {q}")
    if m < 1:
        raise DomainError(f"m must be >= 1, got {m}")
    p_odd = (1.0 - (1.0 - 2.0 * q) ** m) / 2.0
    return max(0.0, m * binary_entropy(q) - binary_entropy(min(1.0, max(0.0, p_odd))))


def predictive_di(
    dist: BellDiagonalDist,
    n: int,
    past_events: Iterable[MeasurementEvent | dict],
    next_observable: Iterable[int],
    cap: int = DEFAULT_XSECTOR_CAP,
) -> float:
    """Entropy of the next binary outcome before it is observed."""
    _check_inputs(dist, n, cap, "xsector")
    past_events = _coerce_events(past_events)
    _validate_events(n, past_events)
    next_observable = sorted(set(next_observable))
    if not next_observable or any(not 0 <= i < n for i in next_observable):
        raise ValidationError(f"next_observable must be a non-empty subset of 0..{n - 1}")

    q = dist.psi_mass
    idx = np.arange(2**n, dtype=np.uint32)
    weights, _ = _condition(idx, _product_prior((1.0 - q, q), n), past_events, lambda i: i)
    odd = _odd_parity(idx, next_observable)
    p_odd = float(np.sum(weights, where=odd)) / weights.sum()
    return binary_entropy(min(1.0, max(0.0, p_odd)))

"""Deterministic per-trial seed derivation.

Trial ``t`` of an experiment with master seed ``s`` uses the ``(t + 1)``-th
output of a SplitMix64 generator whose state starts at ``s``::

    state_t = (s + (t + 1) * 0x9E3779B97F4A7C15) mod 2**64
    seed_t  = splitmix64_mix(state_t)

Each trial seed depends only on ``(s, t)``, so adding trials never perturbs
earlier ones, and trials can run on any number of workers.
"""

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def splitmix64_mix(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def trial_seed(master_seed: int, trial: int) -> int:
    if trial < 0:
        raise ValueError("trial index must be non-negative")
    return splitmix64_mix(master_seed + (trial + 1) * GOLDEN_GAMMA)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed & MASK64)

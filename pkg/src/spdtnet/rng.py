"""Counter-based random streams.

Simulation draws are keyed on ``(seed, purpose, ...)`` rather than taken
sequentially from a generator, so two runs that differ only in network
structure still share the draw for a given node and day.
"""
from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)

# purpose tags
INFECT = 1
DECAY = 2
TAU = 3
RING = 4
DETECT = 5


def _mix(x: np.ndarray) -> np.ndarray:
    x = x + _GOLDEN
    x = (x ^ (x >> np.uint64(30))) * _M1
    x = (x ^ (x >> np.uint64(27))) * _M2
    return x ^ (x >> np.uint64(31))


def hash_u64(seed: int, *keys) -> np.ndarray:
    with np.errstate(over="ignore"):
        h = _mix(np.atleast_1d(np.asarray(seed).astype(np.uint64)))
        for k in keys:
            k = np.atleast_1d(np.asarray(k).astype(np.int64).astype(np.uint64))
            h = _mix(h ^ (k * _GOLDEN))
    return h


def hash_uniform(seed: int, *keys) -> np.ndarray:
    """Uniform draws in [0, 1), one per broadcast element of ``keys``."""
    return (hash_u64(seed, *keys) >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def check_random_state(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)

"""Deterministic random-stream derivation for reproducible Monte Carlo work.

All randomness in this package flows through numpy ``Generator`` objects
built from explicit integer seeds.  Replicated or parallel work never shares
a stream: each unit of work derives its own child stream from the root seed
and an integer key path, so results depend only on ``(seed, key)`` and never
on scheduling, chunking, or worker count.

The derivation rule is ``PCG64(SeedSequence(seed, spawn_key=key))``; the
same pair always yields the same stream regardless of how many other
streams were created before it.
"""

from __future__ import annotations

import operator

import numpy as np

__all__ = ["make_rng", "substream", "derive_seed"]


def make_rng(seed: int | np.random.SeedSequence | np.random.Generator) -> np.random.Generator:
    """Coerce ``seed`` to a Generator; Generators pass through unchanged."""
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(operator.index(seed))))


def substream(seed: int, *key: int) -> np.random.Generator:
    """Child stream identified by an integer key path under ``seed``."""
    ss = np.random.SeedSequence(
        operator.index(seed), spawn_key=tuple(operator.index(k) for k in key)
    )
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(seed: int, *key: int) -> int:
    """A 63-bit integer seed derived from ``(seed, key)``, for nested use."""
    ss = np.random.SeedSequence(
        operator.index(seed), spawn_key=tuple(operator.index(k) for k in key)
    )
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> 1)

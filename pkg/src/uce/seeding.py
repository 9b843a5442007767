"""Deterministic, keyed random-number generation.

Every stochastic operation in this package takes an explicit seed and
draws from numpy's PCG64 generator, which is seedable and produces the
same stream on every platform. Parallel work derives independent
sub-streams from (master seed, string/int keys) so execution order can
never change results.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _key_to_int(part: str | int) -> int:
    if isinstance(part, int):
        return part & 0xFFFFFFFF
    digest = hashlib.sha256(str(part).encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little")


def derived_sequence(master_seed: int, *parts: str | int) -> np.random.SeedSequence:
    """SeedSequence keyed by (master seed, parts); order-independent across tasks."""
    return np.random.SeedSequence(
        entropy=master_seed, spawn_key=tuple(_key_to_int(p) for p in parts)
    )


def rng_for(master_seed: int, *parts: str | int) -> np.random.Generator:
    """PCG64 generator for the sub-task identified by `parts`."""
    return np.random.default_rng(derived_sequence(master_seed, *parts))

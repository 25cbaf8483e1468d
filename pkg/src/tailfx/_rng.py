"""Seed handling shared by every stochastic routine.

All randomness is drawn from :class:`numpy.random.Generator` objects built from
an explicit seed. Child streams are derived with :class:`numpy.random.SeedSequence`
spawn keys so that replication ``r`` of a run always sees the same stream,
regardless of how many other replications ran before it.
"""

from __future__ import annotations

from typing import Union

import numpy as np

SeedLike = Union[None, int, np.random.SeedSequence, np.random.Generator]


def as_generator(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def split_seed(master: int | np.random.SeedSequence, index: int) -> np.random.SeedSequence:
    """Return the ``index``-th child of ``master``, independent of sibling order."""
    if isinstance(master, np.random.SeedSequence):
        return np.random.SeedSequence(master.entropy, spawn_key=master.spawn_key + (index,))
    return np.random.SeedSequence(int(master), spawn_key=(index,))

"""Deterministic derivation of independent random streams.

Every stochastic component of the library (channel draws, solver
initialisation, random selection, fallbacks) pulls its randomness from a
stream addressed by ``(master_seed, *path)``.  Streams are derived with
``numpy.random.SeedSequence`` spawn keys, so two different paths give
statistically independent generators and the derivation is independent of
the order in which streams are created.  This is what makes parallel runs
reproduce serial runs bit for bit.
"""

from __future__ import annotations

import numpy as np

__all__ = ["substream", "derive_seed"]


def _seed_sequence(master_seed: int, path: tuple[int, ...]) -> np.random.SeedSequence:
    if int(master_seed) < 0:
        raise ValueError(f"master seed must be non-negative, got {master_seed}")
    return np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(p) for p in path))


def substream(master_seed: int, *path: int) -> np.random.Generator:
    """Return an independent Generator for the stream ``(master_seed, *path)``.

    The same arguments always give a generator producing the same values;
    distinct paths give independent streams.
    """
    return np.random.default_rng(_seed_sequence(master_seed, path))


def derive_seed(master_seed: int, *path: int) -> int:
    """Collapse ``(master_seed, *path)`` into a single integer seed.

    Used where an API takes a plain seed-of-record (for example channel
    files) but the value must still be derived reproducibly from a master
    seed.
    """
    return int(_seed_sequence(master_seed, path).generate_state(1, dtype=np.uint64)[0])

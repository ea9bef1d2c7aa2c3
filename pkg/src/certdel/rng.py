"""Counter-based random streams.

Every random draw in the package comes from a :class:`numpy.random.Generator`
backed by Philox, keyed by ``(master_seed, trial_index, party_tag)``. Trial
``i`` therefore sees the same numbers no matter how many workers run the
experiment or in which order trials complete.

Substream derivation::

    SeedSequence(entropy=master_seed, spawn_key=(trial_index, PARTY_TAGS[tag]))
        -> Philox -> Generator
"""

from __future__ import annotations

import numpy as np

PARTY_TAGS = {
    "source": 1,  # temporarily private randomness (revealed at t5')
    "private": 2,  # Alice's private randomness, never revealed
    "device": 3,  # box behaviour supplied by Eve
    "bob": 4,
    "eve": 5,
    "distinguisher": 6,
    "simulator": 7,
    "experiment": 8,
    "public": 9,  # public code choices (syndrome matrices)
}

SEED_MASK = (1 << 64) - 1


def substream(master_seed: int, trial_index: int = 0, party: str = "experiment") -> np.random.Generator:
    """Return the generator for one (seed, trial, party) triple."""
    if party not in PARTY_TAGS:
        raise ValueError(f"unknown party tag {party!r}")
    seq = np.random.SeedSequence(
        entropy=int(master_seed) & SEED_MASK,
        spawn_key=(int(trial_index), PARTY_TAGS[party]),
    )
    return np.random.Generator(np.random.Philox(seq))


class Streams:
    """Lazily created per-party generators for one trial."""

    def __init__(self, master_seed: int, trial_index: int = 0):
        self.master_seed = int(master_seed)
        self.trial_index = int(trial_index)
        self._cache: dict[str, np.random.Generator] = {}

    def __getitem__(self, party: str) -> np.random.Generator:
        if party not in self._cache:
            self._cache[party] = substream(self.master_seed, self.trial_index, party)
        return self._cache[party]

    def __repr__(self):
        return f"Streams(master_seed={self.master_seed}, trial_index={self.trial_index})"


def as_generator(rng) -> np.random.Generator:
    """Accept a Generator, an int seed or None."""
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None:
        return substream(0)
    return substream(int(rng))

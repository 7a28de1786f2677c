"""Deterministic, splittable random streams.

Every estimator takes a ``SeededRng`` value instead of a bare seed so that
parallel workers draw from disjoint counter-based streams and results are
reproducible for a fixed (seed, worker-count) regardless of scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Streams are keyed by (seed, stream_id); children multiply into id-space so
# that distinct derivation paths never collide for the nesting depths used
# here (< 4 levels, < _FANOUT streams per level).
_FANOUT = 1_000_003


@dataclass(frozen=True)
class SeededRng:
    """A named position in a deterministic tree of Philox streams."""

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        """Instantiate the numpy generator for this stream."""
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.Philox(ss))

    def stream(self, offset: int) -> "SeededRng":
        """Derive a child stream; distinct offsets give independent streams."""
        if offset < 0 or offset >= _FANOUT - 1:
            raise ValueError(f"stream offset out of range: {offset}")
        return SeededRng(self.seed, self.stream_id * _FANOUT + offset + 1)


def partition_counts(n_total: int, workers: int) -> list[int]:
    """Split a sample budget across workers, front-loading the remainder."""
    if workers < 1:
        raise ValueError("workers must be >= 1")
    base, extra = divmod(n_total, workers)
    return [base + (1 if w < extra else 0) for w in range(workers)]

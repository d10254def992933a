"""Reproducible random streams.

Every stochastic routine in the library draws from a stream addressed by
``(seed, replication, purpose)``.  Streams are built on numpy's counter-based
Philox generator keyed by a SeedSequence spawn key, so distinct addresses give
statistically independent streams and the same address reproduces the same
variate sequence on any platform, regardless of how work is scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["PURPOSES", "RandomStream", "make_rng"]

# Fixed purpose registry; the index is part of the stream address, so the
# order is frozen.  New purposes append.
PURPOSES = ("arrivals", "services", "patience", "initial", "gaussian", "scratch")


def make_rng(seed: int, replication: int = 0, purpose: str = "scratch") -> np.random.Generator:
    """Generator for the stream addressed by (seed, replication, purpose)."""
    if purpose not in PURPOSES:
        raise ValueError(f"unknown purpose {purpose!r}; known: {PURPOSES}")
    if replication < 0:
        raise ValueError("replication index must be nonnegative")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(replication), PURPOSES.index(purpose)))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class RandomStream:
    """Address of an independent random stream."""

    seed: int
    replication: int = 0
    purpose: str = "scratch"

    def generator(self) -> np.random.Generator:
        return make_rng(self.seed, self.replication, self.purpose)

    def sibling(self, purpose: str) -> "RandomStream":
        return RandomStream(self.seed, self.replication, purpose)


class BlockSampler:
    """Amortized scalar draws from a vectorized sampler.

    ``draw(rng, size) -> ndarray`` is called in blocks; ``next()`` pops one
    variate.  Used by the event loop, where per-customer draws must stay
    cheap without giving up stream reproducibility (the consumed sequence is
    identical to calling draw(rng, total) once).
    """

    def __init__(self, rng: np.random.Generator, draw, block: int = 4096):
        self._rng = rng
        self._draw = draw
        self._block = int(block)
        self._buf = draw(rng, self._block)
        self._i = 0

    def next(self) -> float:
        if self._i >= self._buf.size:
            self._buf = self._draw(self._rng, self._block)
            self._i = 0
        v = self._buf[self._i]
        self._i += 1
        return float(v)

"""Seeded random streams.

A single chain owns one stream and consumes it sequentially, which makes every
run bit-reproducible from its seed. Independent streams (parallel chains,
per-state updates) are derived from a root seed by index, never by sharing.
"""

import numpy as np


class RngStream:
    """Thin wrapper around numpy's PCG64 ``Generator`` with indexed substreams.

    Identical seeds produce identical draw sequences. ``substream(i)`` derives
    a stream that is statistically independent of the parent and of any other
    index, and is itself a pure function of ``(seed, derivation path)``.
    """

    def __init__(self, seed, _seq=None):
        self.seed = int(seed) if _seq is None else None
        self._seq = np.random.SeedSequence(int(seed)) if _seq is None else _seq
        self._gen = np.random.Generator(np.random.PCG64(self._seq))

    def substream(self, index):
        child = np.random.SeedSequence(
            entropy=self._seq.entropy, spawn_key=self._seq.spawn_key + (int(index),)
        )
        return RngStream(0, _seq=child)

    # -- primitive draws (all downstream sampling goes through these) --------

    def random(self, size=None):
        return self._gen.random(size)

    def uniform(self, low=0.0, high=1.0, size=None):
        return self._gen.uniform(low, high, size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self._gen.normal(loc, scale, size)

    def gamma(self, shape, scale=1.0, size=None):
        return self._gen.gamma(shape, scale, size)

    def beta(self, a, b, size=None):
        return self._gen.beta(a, b, size)

    def poisson(self, lam, size=None):
        return self._gen.poisson(lam, size)

    def geometric(self, p, size=None):
        return self._gen.geometric(p, size)

    def integers(self, low, high=None, size=None):
        return self._gen.integers(low, high, size)

    def categorical(self, p):
        """Index draw from an unnormalized nonnegative weight vector."""
        p = np.asarray(p, dtype=float)
        total = p.sum()
        if not np.isfinite(total) or total <= 0.0:
            raise ValueError("categorical weights must have positive finite sum")
        cdf = np.cumsum(p)
        return int(np.searchsorted(cdf, self._gen.random() * total, side="right").clip(0, len(p) - 1))

"""Counter-based random streams for reproducible parallel Monte Carlo.

A :class:`CounterRNG` is keyed by ``(seed, stream)``. Trial ``t`` owns a
fixed window of Philox output words, so any trial can be regenerated in
isolation and any partition of a trial range into chunks yields identical
draws. Gaussians are produced with the Box-Muller transform, which
consumes exactly two uniforms per complex sample.
"""

from __future__ import annotations

import numpy as np

__all__ = ["CounterRNG", "make_rng", "CHANNEL_STREAM", "SYMBOL_STREAM", "NOISE_STREAM"]

CHANNEL_STREAM = 0
SYMBOL_STREAM = 1
NOISE_STREAM = 2

_WORDS_PER_BLOCK = 4  # Philox4x64 emits four uint64 per counter increment
_TWO_PI = 2.0 * np.pi


def make_rng(seed: int) -> np.random.Generator:
    """Plain seeded generator for ad hoc use (tests, one-off draws)."""
    return np.random.default_rng(seed)


class CounterRNG:
    """Philox stream addressed by trial index.

    Parameters
    ----------
    seed : int
        Master seed (non-negative).
    stream : int
        Purpose tag; distinct tags give statistically independent streams.
    """

    def __init__(self, seed: int, stream: int = 0):
        if seed < 0:
            raise ValueError("seed must be non-negative")
        self.seed = int(seed)
        self.stream = int(stream)
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream,))
        self._key = ss.generate_state(2, dtype=np.uint64)

    def __repr__(self) -> str:
        return f"CounterRNG(seed={self.seed}, stream={self.stream})"

    def raw(self, start: int, count: int, words: int) -> np.ndarray:
        """Raw uint64 words, shape ``(count, words)``, for trials ``start..start+count-1``."""
        blocks = -(-words // _WORDS_PER_BLOCK)
        width = blocks * _WORDS_PER_BLOCK
        bitgen = np.random.Philox(key=self._key, counter=start * blocks)
        out = bitgen.random_raw(count * width).reshape(count, width)
        return out[:, :words]

    def uniforms(self, start: int, count: int, width: int) -> np.ndarray:
        """Uniform doubles in (0, 1], shape ``(count, width)``."""
        raw = self.raw(start, count, width)
        return ((raw >> np.uint64(11)).astype(np.float64) + 1.0) * (1.0 / 9007199254740992.0)

    def complex_normals(self, start: int, count: int, width: int) -> np.ndarray:
        """Circularly-symmetric complex Gaussians CN(0, 1), shape ``(count, width)``."""
        u = self.uniforms(start, count, 2 * width)
        radius = np.sqrt(-np.log(u[:, :width]))
        return radius * np.exp(1j * _TWO_PI * u[:, width:])

    def integers(self, start: int, count: int, high: int) -> np.ndarray:
        """One integer in ``[0, high)`` per trial."""
        u = self.uniforms(start, count, 1)[:, 0]
        # u lies in (0, 1]; map to [0, high) without hitting ``high``
        return np.minimum(np.floor((1.0 - u) * high).astype(np.int64), high - 1)

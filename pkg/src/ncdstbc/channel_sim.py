"""Two-hop amplify-and-forward relay channel.

Phase one: the source sends ``s = D^k x`` (length T = 2R) and relay j hears
``r_j = sqrt(P1 T) f_j s + n_j``. Phase two: relay j sends
``t_j = sqrt(P2 / (1 + P1)) A_j r_j`` and the destination receives
``y = sum_j g_j t_j + w``. A silent relay contributes ``t_j = 0``.

Every function accepts an optional leading batch axis of trials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .code_construction import Codebook
from .errors import ConfigurationError
from .rng import CHANNEL_STREAM, CounterRNG

__all__ = [
    "PowerConfig",
    "ChannelRealization",
    "ReceivedSignal",
    "db_to_linear",
    "sample_channel",
    "transmit",
    "transmit_equivalent",
    "effective_noise",
    "effective_noise_stats",
]


def db_to_linear(p_db: float) -> float:
    return 0.0 if p_db == -math.inf else 10.0 ** (p_db / 10.0)


@dataclass(frozen=True)
class PowerConfig:
    """Power allocation; ``P_total = P1 + R * P2`` (linear scale)."""

    P_total: float
    P1: float
    P2: float
    R: int

    def __post_init__(self):
        if self.P_total < 0 or self.P1 < 0 or self.P2 < 0:
            raise ConfigurationError("powers must be non-negative")
        if not math.isclose(self.P_total, self.P1 + self.R * self.P2, rel_tol=1e-12, abs_tol=1e-300):
            raise ConfigurationError(
                f"P_total={self.P_total} differs from P1 + R*P2 = {self.P1 + self.R * self.P2}"
            )

    @classmethod
    def split(cls, P: float, R: int, p1_frac: float = 0.5, p2_each: Optional[float] = None):
        """Split total power ``P``.

        By default ``P1 = P/2`` and ``P2 = P/(2R)``. ``p1_frac`` sets the
        source share; ``p2_each`` (fraction of P per relay) defaults to
        ``(1 - p1_frac) / R`` and must be consistent with it.
        """
        if not 0.0 <= p1_frac <= 1.0:
            raise ConfigurationError("p1_frac must lie in [0, 1]")
        if p2_each is None:
            p2_each = (1.0 - p1_frac) / R
        elif not math.isclose(p1_frac + R * p2_each, 1.0, rel_tol=1e-9):
            raise ConfigurationError("p1_frac + R * p2_each must equal 1")
        return cls(P, p1_frac * P, p2_each * P, R)

    @classmethod
    def from_db(cls, p_db: float, R: int, **kw):
        return cls.split(db_to_linear(p_db), R, **kw)

    @property
    def T(self) -> int:
        return 2 * self.R

    @property
    def relay_gain(self) -> float:
        """Relay amplification ``sqrt(P2 / (1 + P1))``."""
        return math.sqrt(self.P2 / (1.0 + self.P1))

    @property
    def rho(self) -> float:
        """Effective SNR factor ``P1 P2 T / (P1 + 1)``."""
        return self.P1 * self.P2 * self.T / (self.P1 + 1.0)

    def gamma(self, g) -> np.ndarray:
        """Noise variance ``1 + P2/(1+P1) * sum |g_j|^2`` (per trial if g is batched)."""
        g = np.asarray(g)
        return 1.0 + self.P2 / (1.0 + self.P1) * np.sum(np.abs(g) ** 2, axis=-1)


@dataclass
class ChannelRealization:
    """Fades and noises for one trial or a batch of trials.

    Shapes (with optional leading batch axis ``N``): ``f``, ``g``: (R,);
    ``relay_noise``: (R, T); ``dest_noise``: (T,); ``alive``: (R,) bool.
    """

    f: np.ndarray
    g: np.ndarray
    relay_noise: np.ndarray
    dest_noise: np.ndarray
    alive: np.ndarray

    @property
    def h(self) -> np.ndarray:
        """Equivalent channel ``h_j = f_j g_j``."""
        return self.f * self.g

    @property
    def R(self) -> int:
        return self.f.shape[-1]

    def trial(self, i: int) -> "ChannelRealization":
        return ChannelRealization(self.f[i], self.g[i], self.relay_noise[i], self.dest_noise[i], self.alive)


@dataclass
class ReceivedSignal:
    y: np.ndarray
    g: np.ndarray
    powers: PowerConfig


def _alive_mask(R: int, failure_mask) -> np.ndarray:
    if failure_mask is None:
        return np.ones(R, dtype=bool)
    failed = np.asarray(failure_mask, dtype=bool)
    if failed.shape != (R,):
        raise ConfigurationError(f"failure mask must have length R = {R}")
    return ~failed


def sample_channel(
    R: int,
    rng,
    failure_mask: Optional[Sequence[bool]] = None,
    start: int = 0,
    count: Optional[int] = None,
) -> ChannelRealization:
    """Draw i.i.d. CN(0, 1) fades and noises.

    Parameters
    ----------
    R : int
    rng : CounterRNG or int
        Counter-based stream (an int is taken as a seed on the channel stream).
    failure_mask : sequence of bool, optional
        ``True`` marks a silent relay.
    start, count : int
        Trial range. ``count=None`` returns the single trial ``start``
        without a batch axis.

    Notes
    -----
    Trial ``t`` always receives the same draws, whatever ``start``/``count``
    window it is requested in.
    """
    if not isinstance(rng, CounterRNG):
        rng = CounterRNG(int(rng), CHANNEL_STREAM)
    T = 2 * R
    n = 1 if count is None else count
    z = rng.complex_normals(start, n, 2 * R + R * T + T)
    f = z[:, :R]
    g = z[:, R:2 * R]
    relay_noise = z[:, 2 * R:2 * R + R * T].reshape(n, R, T)
    dest_noise = z[:, 2 * R + R * T:]
    real = ChannelRealization(f, g, relay_noise, dest_noise, _alive_mask(R, failure_mask))
    return real.trial(0) if count is None else real


def _source_vectors(book: Codebook, k) -> np.ndarray:
    return book.diag_powers()[np.asarray(k)] * book.x


def transmit(book: Codebook, k, powers: PowerConfig, ch: ChannelRealization) -> ReceivedSignal:
    """Run both protocol phases relay by relay.

    ``k`` is a codeword index or an array of indices matching the batch axis
    of ``ch``.
    """
    T = book.T
    s = _source_vectors(book, k)  # (..., T)
    A = np.stack([np.diag(a) for a in book.relay_matrices])  # (R, T) diagonals
    r = math.sqrt(powers.P1 * T) * ch.f[..., :, None] * s[..., None, :] + ch.relay_noise
    t = powers.relay_gain * A * r * ch.alive[:, None]
    y = np.sum(ch.g[..., :, None] * t, axis=-2) + ch.dest_noise
    return ReceivedSignal(y, ch.g, powers)


def effective_noise(powers: PowerConfig, g, relay_noise, dest_noise, relay_mats, alive=None) -> np.ndarray:
    """``n = sqrt(P2/(1+P1)) sum_j g_j A_j n_j + w`` for full (T x T) relay matrices."""
    A = np.asarray(relay_mats)
    if alive is None:
        alive = np.ones(A.shape[0], dtype=bool)
    mixed = np.einsum("jab,...jb->...ja", A, relay_noise)
    return powers.relay_gain * np.sum((g * alive)[..., :, None] * mixed, axis=-2) + dest_noise


def transmit_equivalent(book: Codebook, k, powers: PowerConfig, ch: ChannelRealization) -> ReceivedSignal:
    """Same output via the compact form ``y = sqrt(rho) S_k h + n``."""
    S = book.codewords[np.asarray(k)]  # (..., T, R)
    h = ch.h * ch.alive
    n = effective_noise(powers, ch.g, ch.relay_noise, ch.dest_noise, book.relay_matrices, ch.alive)
    y = math.sqrt(powers.rho) * np.einsum("...tr,...r->...t", S, h) + n
    return ReceivedSignal(y, ch.g, powers)


def effective_noise_stats(
    powers: PowerConfig,
    g,
    n_samples: int,
    rng,
    relay_mats=None,
) -> tuple:
    """Empirical mean norm and covariance of the destination noise for fixed ``g``.

    ``relay_mats`` defaults to identity matrices (any diagonal unitary set
    gives the same statistics); passing non-unitary matrices shows the
    covariance losing its scaled-identity form.

    Returns
    -------
    mean_norm : float
        Euclidean norm of the sample mean vector.
    cov : ndarray (T, T)
        Sample covariance ``E[n n^H]`` (zero-mean estimator).
    """
    R = powers.R
    T = powers.T
    g = np.asarray(g, dtype=np.complex128)
    if relay_mats is None:
        relay_mats = np.broadcast_to(np.eye(T), (R, T, T))
    if not isinstance(rng, CounterRNG):
        rng = CounterRNG(int(rng), CHANNEL_STREAM)
    z = rng.complex_normals(0, n_samples, R * T + T)
    relay_noise = z[:, : R * T].reshape(n_samples, R, T)
    n = effective_noise(powers, g, relay_noise, z[:, R * T:], relay_mats)
    mean = n.mean(axis=0)
    cov = n.T @ n.conj() / n_samples
    return float(np.linalg.norm(mean)), cov

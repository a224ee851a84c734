"""Partially-coherent ML decoders.

The destination knows the relay-to-destination fades ``g`` but not the
source-to-relay fades. Given ``g``, ``y`` is zero-mean Gaussian with
covariance ``Sigma_y(k) = rho S_k diag(|g|^2) S_k^H + gamma I``.

Five decoders are provided, from the direct likelihood down to a single
complex multiply per candidate:

``full``
    maximize ``-log|Sigma_y| - y^H Sigma_y^{-1} y`` (the reference).
``unitary``
    maximize ``y^H S G S^H y`` with ``G = diag(beta)``; exact for
    codebooks with ``S^H S = t I``.
``ncdstbc``
    the unitary metric written with ``y = [y1; y2]`` split in halves,
    ``y1^H G1 y1 + 2 Re{y1^H G2 y2} + y2^H G3 y2`` where
    ``G_i(k) = Upsilon_i(k) * Omega`` (entry-wise).
``reduced-tail``
    drops the ``y2`` quadratic term, constant in k when the tail
    exponents are equal.
``reduced-scalar``
    ``Re{w^{v k} y1^H Omega y2}`` when additionally all head exponents
    are equal.

All metric functions accept a leading batch axis on ``y`` and ``g`` and
return one score per codeword along the last axis. Decoders return the
index of the largest score; ties go to the smallest index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import complex_linalg as cl
from .channel_sim import PowerConfig
from .code_construction import Codebook, CyclicCodeSpec
from .errors import ContractViolation

__all__ = [
    "DECODERS",
    "MetricContext",
    "metric_context",
    "check_decoder_constraints",
    "full_pdf_metrics",
    "unitary_metrics",
    "ncdstbc_metrics",
    "reduced_equal_tail_metrics",
    "reduced_scalar_metrics",
    "decode",
    "decode_full_pdf",
    "decode_unitary",
    "decode_ncdstbc",
    "decode_reduced_equal_tail",
    "decode_reduced_scalar",
]


def beta_weights(g, powers: PowerConfig) -> np.ndarray:
    """``beta_j = |g_j|^2 / (|g_j|^2 + gamma / rho)``; zero when rho is zero."""
    g2 = np.abs(np.asarray(g)) ** 2
    gamma = powers.gamma(g)
    # written as rho |g|^2 / (rho |g|^2 + gamma) so that P = 0 is well defined
    num = powers.rho * g2
    return num / (num + np.asarray(gamma)[..., None])


@dataclass
class MetricContext:
    """Per-trial quantities shared by the structured decoders.

    ``Omega[i, j] = sum_l beta_l m_il conj(m_jl)`` is Hermitian; ``root`` is
    ``w = exp(j 2 pi / L)``.
    """

    rho: float
    gamma: np.ndarray
    beta: np.ndarray
    G: np.ndarray
    Omega: np.ndarray
    root: complex
    spec: CyclicCodeSpec

    def upsilon(self, k: int) -> tuple:
        """``(Upsilon_1, Upsilon_2, Upsilon_3)`` for codeword ``k``."""
        e1, e2, e3 = _upsilon_exponents(self.spec)
        L = self.spec.L
        roots = np.exp(2j * np.pi * np.arange(L) / L)
        return tuple(roots[(e * k) % L] for e in (e1, e2, e3))


def metric_context(book: Codebook, g, powers: PowerConfig) -> MetricContext:
    if not isinstance(book.spec, CyclicCodeSpec):
        raise ContractViolation("structured decoders need a cyclic code")
    beta = beta_weights(g, powers)
    M = book.M
    omega = np.einsum("...l,il,jl->...ij", beta, M, np.conj(M))
    G = beta[..., :, None] * np.eye(book.R)
    return MetricContext(
        powers.rho, np.asarray(powers.gamma(g)), beta, G, omega,
        complex(np.exp(2j * np.pi / book.spec.L)), book.spec,
    )


def _upsilon_exponents(spec: CyclicCodeSpec) -> tuple:
    u = np.asarray(spec.u)
    R = spec.R
    head, tail = u[:R], u[R:]
    return (
        head[:, None] - head[None, :],
        head[:, None] - tail[None, :],
        tail[:, None] - tail[None, :],
    )


def _upsilon_tables(spec: CyclicCodeSpec) -> tuple:
    """Upsilon_i for every k at once, each (L, R, R)."""
    L = spec.L
    roots = np.exp(2j * np.pi * np.arange(L) / L)
    k = np.arange(L)[:, None, None]
    return tuple(roots[(e[None] * k) % L] for e in _upsilon_exponents(spec))


def check_decoder_constraints(kind: str, book: Codebook) -> None:
    """Raise ContractViolation if ``book`` cannot be decoded with ``kind``."""
    if kind not in DECODERS:
        raise ContractViolation(f"unknown decoder {kind!r}")
    if kind == "full":
        return
    if not book.unitary:
        raise ContractViolation("codebook is not unitary (S^H S != t I)")
    if kind == "unitary":
        return
    spec = book.spec
    if not isinstance(spec, CyclicCodeSpec):
        raise ContractViolation(f"decoder {kind!r} needs a cyclic code")
    if kind in ("reduced-tail", "reduced-scalar") and not spec.has_equal_tail():
        raise ContractViolation(f"decoder {kind!r} needs u_(R+1) = ... = u_(2R), got u = {spec.u}")
    if kind == "reduced-scalar":
        if not spec.has_scalar_form():
            raise ContractViolation(f"decoder 'reduced-scalar' needs u_1 = ... = u_R, got u = {spec.u}")
        if math.gcd(spec.v[0], spec.L) != 1:
            raise ContractViolation("decoder 'reduced-scalar' needs gcd(u_1 - u_(R+1), L) = 1")


def full_pdf_metrics(y, book: Codebook, g, powers: PowerConfig) -> np.ndarray:
    """Log-likelihood ``-log|Sigma_y(k)| - y^H Sigma_y(k)^{-1} y`` per codeword."""
    y = np.asarray(y, dtype=np.complex128)
    g = np.asarray(g, dtype=np.complex128)
    S = book.codewords  # (L, T, R)
    T = book.T
    gamma = np.asarray(powers.gamma(g))[..., None, None, None]
    g2 = np.abs(g) ** 2
    # (..., L, T, T)
    sig = powers.rho * np.einsum("ktr,...r,ksr->...kts", S, g2, np.conj(S)) + gamma * np.eye(T)
    low = cl.cholesky(sig)
    logdet = 2.0 * np.sum(np.log(np.real(np.diagonal(low, axis1=-2, axis2=-1))), axis=-1)
    yb = y[..., None, :]
    x = cl.cholesky_solve(low, np.broadcast_to(yb, sig.shape[:-1]))
    quad = np.real(np.sum(np.conj(yb) * x, axis=-1))
    return -logdet - quad


def unitary_metrics(y, book: Codebook, g, powers: PowerConfig) -> np.ndarray:
    """``y^H S_k G S_k^H y`` per codeword."""
    y = np.asarray(y, dtype=np.complex128)
    beta = beta_weights(g, powers)
    z = np.einsum("ktr,...t->...kr", np.conj(book.codewords), y)  # S_k^H y
    return np.sum(beta[..., None, :] * np.abs(z) ** 2, axis=-1)


def _split(y, R: int) -> tuple:
    y = np.asarray(y, dtype=np.complex128)
    return y[..., :R], y[..., R:]


def _qform(a, G, b) -> np.ndarray:
    """``a^H G_k b`` for every k: a, b (..., R), G (..., L, R, R) -> (..., L)."""
    return np.einsum("...i,...kij,...j->...k", np.conj(a), G, b)


def ncdstbc_metrics(y, book: Codebook, g, powers: PowerConfig, drop_tail: bool = False) -> np.ndarray:
    """Half-split metric; equals ``2R`` times :func:`unitary_metrics`."""
    ctx = metric_context(book, g, powers)
    y1, y2 = _split(y, book.R)
    ups1, ups2, ups3 = _upsilon_tables(book.spec)
    om = ctx.Omega[..., None, :, :]
    total = np.real(_qform(y1, ups1 * om, y1)) + 2.0 * np.real(_qform(y1, ups2 * om, y2))
    if not drop_tail:
        total = total + np.real(_qform(y2, ups3 * om, y2))
    return total


def reduced_equal_tail_metrics(y, book: Codebook, g, powers: PowerConfig) -> np.ndarray:
    check_decoder_constraints("reduced-tail", book)
    return ncdstbc_metrics(y, book, g, powers, drop_tail=True)


def reduced_scalar_metrics(y, book: Codebook, g, powers: PowerConfig) -> np.ndarray:
    """``Re{w^{v k} z}`` with ``z = y1^H Omega y2`` computed once."""
    check_decoder_constraints("reduced-scalar", book)
    spec = book.spec
    ctx = metric_context(book, g, powers)
    y1, y2 = _split(y, book.R)
    z = np.einsum("...i,...ij,...j->...", np.conj(y1), ctx.Omega, y2)
    L = spec.L
    rot = np.exp(2j * np.pi * ((spec.v[0] * np.arange(L)) % L) / L)
    return np.real(z[..., None] * rot)


_METRICS = {
    "full": full_pdf_metrics,
    "unitary": unitary_metrics,
    "ncdstbc": ncdstbc_metrics,
    "reduced-tail": reduced_equal_tail_metrics,
    "reduced-scalar": reduced_scalar_metrics,
}
DECODERS = tuple(_METRICS)


def metrics(kind: str, y, book: Codebook, g, powers: PowerConfig) -> np.ndarray:
    check_decoder_constraints(kind, book)
    return _METRICS[kind](y, book, g, powers)


TIE_RTOL = 1e-12


def _argmax(scores: np.ndarray):
    # scores within rounding of the best count as ties; take the first of them
    best = np.max(scores, axis=-1, keepdims=True)
    slack = TIE_RTOL * np.maximum(np.max(np.abs(scores), axis=-1, keepdims=True), 1e-300)
    k = np.argmax(scores >= best - slack, axis=-1)
    return int(k) if k.ndim == 0 else k


def decode(kind: str, y, book: Codebook, g, powers: PowerConfig):
    """Decode with the decoder named ``kind`` (one of :data:`DECODERS`)."""
    return _argmax(metrics(kind, y, book, g, powers))


def decode_full_pdf(y, book, g, powers):
    return decode("full", y, book, g, powers)


def decode_unitary(y, book, g, powers):
    return decode("unitary", y, book, g, powers)


def decode_ncdstbc(y, book, g, powers):
    return decode("ncdstbc", y, book, g, powers)


def decode_reduced_equal_tail(y, book, g, powers):
    return decode("reduced-tail", y, book, g, powers)


def decode_reduced_scalar(y, book, g, powers):
    return decode("reduced-scalar", y, book, g, powers)

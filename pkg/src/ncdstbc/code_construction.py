"""Cyclic and abelian distributed space-time block codes.

A code for ``R`` relays lives in ``T = 2R`` dimensions. The source holds a
group of diagonal unitary matrices ``D^k`` and the vector ``x = 1/sqrt(2R)``
(all ones); relay ``j`` multiplies what it hears by the diagonal matrix
``A_j`` built from column ``j`` of ``Gamma = [M; M]``, with ``M`` an R x R
generalized Butson-Hadamard (GBH) matrix. The destination therefore sees
the codeword

    S_k = [A_1 D^k x, ..., A_R D^k x] = D^k Gamma / sqrt(2R).

Codeword indices are zero based: ``k = 0`` is the group identity.

Exponents are kept as integers so that every diversity decision is made in
exact arithmetic; cosines only appear when a coding gain is reported.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import complex_linalg as cl
from .errors import ConfigurationError, ConstructionError, ContractViolation

__all__ = [
    "GBH_KINDS",
    "CONSTRAINTS",
    "CyclicCodeSpec",
    "AbelianCodeSpec",
    "Codebook",
    "DiversityReport",
    "default_gbh_kind",
    "gbh_matrix",
    "build_gamma",
    "relay_matrices",
    "build_codebook",
    "codeword",
    "codeword_by_relays",
    "is_fully_diverse_gcd",
    "is_fully_diverse_bruteforce",
    "abelian_diversity_check",
    "pair_determinant_delta",
    "coding_gain",
    "search_best_v",
    "surviving_codewords",
    "pairwise_min_rank",
]

GBH_KINDS = ("real_hadamard", "dft")
CONSTRAINTS = ("none", "equal_tail", "scalar")
DEFAULT_MAX_L = 4096
DEFAULT_MAX_CANDIDATES = 2_000_000
_GAIN_RTOL = 1e-9


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def default_gbh_kind(R: int) -> str:
    """Sylvester-Hadamard when R is a power of two, DFT otherwise."""
    return "real_hadamard" if _is_power_of_two(R) else "dft"


@dataclass(frozen=True)
class CyclicCodeSpec:
    """Parameters of a cyclic code.

    ``u`` holds the 2R generator exponents; the generator is
    ``D = diag(exp(j 2 pi u_i / L))``. Entries are reduced mod L on
    construction. ``gbh_kind=None`` picks :func:`default_gbh_kind`.
    """

    R: int
    L: int
    u: tuple
    gbh_kind: Optional[str] = None

    def __post_init__(self):
        if int(self.R) < 1:
            raise ConfigurationError(f"R must be >= 1, got {self.R}")
        if int(self.L) < 1:
            raise ConfigurationError(f"L must be >= 1, got {self.L}")
        object.__setattr__(self, "R", int(self.R))
        object.__setattr__(self, "L", int(self.L))
        u = tuple(int(x) % self.L for x in self.u)
        if len(u) != 2 * self.R:
            raise ConfigurationError(f"u must have 2R = {2 * self.R} entries, got {len(u)}")
        object.__setattr__(self, "u", u)
        kind = self.gbh_kind or default_gbh_kind(self.R)
        if kind not in GBH_KINDS:
            raise ConfigurationError(f"unknown gbh_kind {kind!r}")
        if kind == "real_hadamard" and not _is_power_of_two(self.R):
            raise ConfigurationError(f"real_hadamard needs R a power of two, got R={self.R}")
        object.__setattr__(self, "gbh_kind", kind)

    @classmethod
    def from_v(cls, L: int, v: Sequence[int], tail: int = 0, gbh_kind: Optional[str] = None):
        """Spec with equal tail exponents ``u_{R+i} = tail`` and ``u_i = v_i + tail``."""
        R = len(v)
        u = [(int(x) + tail) % L for x in v] + [tail % L] * R
        return cls(R, L, tuple(u), gbh_kind)

    @property
    def T(self) -> int:
        return 2 * self.R

    @property
    def v(self) -> tuple:
        """Exponent differences ``u_i - u_{R+i}`` mod L."""
        R, L = self.R, self.L
        return tuple((self.u[i] - self.u[R + i]) % L for i in range(R))

    def has_equal_tail(self) -> bool:
        return len(set(self.u[self.R:])) == 1

    def has_scalar_form(self) -> bool:
        return self.has_equal_tail() and len(set(self.u[: self.R])) == 1


@dataclass(frozen=True)
class AbelianCodeSpec:
    """Direct product of K cyclic groups of orders ``orders``.

    ``u_matrix[i][nu]`` is the exponent of row ``i`` (0..2R-1) in the
    generator of factor ``nu``.
    """

    R: int
    orders: tuple
    u_matrix: tuple
    gbh_kind: Optional[str] = None

    def __post_init__(self):
        if int(self.R) < 1:
            raise ConfigurationError("R must be >= 1")
        orders = tuple(int(x) for x in self.orders)
        if not orders or min(orders) < 1:
            raise ConfigurationError("orders must be positive")
        rows = tuple(tuple(int(x) % o for x, o in zip(row, orders)) for row in self.u_matrix)
        if len(rows) != 2 * self.R or any(len(row) != len(orders) for row in self.u_matrix):
            raise ConfigurationError("u_matrix must be 2R x K")
        object.__setattr__(self, "R", int(self.R))
        object.__setattr__(self, "orders", orders)
        object.__setattr__(self, "u_matrix", rows)
        kind = self.gbh_kind or default_gbh_kind(self.R)
        if kind not in GBH_KINDS:
            raise ConfigurationError(f"unknown gbh_kind {kind!r}")
        object.__setattr__(self, "gbh_kind", kind)

    @property
    def K(self) -> int:
        return len(self.orders)

    @property
    def L(self) -> int:
        return math.prod(self.orders)

    @property
    def T(self) -> int:
        return 2 * self.R

    def is_cyclic(self) -> bool:
        return all(math.gcd(a, b) == 1 for a, b in itertools.combinations(self.orders, 2))

    def element(self, index: int) -> tuple:
        """Mixed-radix digits ``(l_1, ..., l_K)`` of a flat group index."""
        return tuple(int(x) for x in np.unravel_index(index, self.orders))


@dataclass(frozen=True, eq=False)
class Codebook:
    """All ingredients of a code and its L codewords.

    Attributes
    ----------
    spec : CyclicCodeSpec or AbelianCodeSpec
    M : ndarray (R, R)
        GBH matrix.
    gamma : ndarray (2R, R)
    relay_matrices : tuple of ndarray (2R, 2R)
        Diagonal unitary ``A_j``.
    exponents : ndarray of int (L, 2R)
        ``D^k = diag(exp(j 2 pi exponents[k] / denominator))``.
    denominator : int
    codewords : ndarray (L, 2R, R)
    x : ndarray (2R,)
    """

    spec: object
    M: np.ndarray
    gamma: np.ndarray
    relay_matrices: tuple
    exponents: np.ndarray
    denominator: int
    codewords: np.ndarray
    x: np.ndarray
    unitary: bool = field(default=True)

    @property
    def R(self) -> int:
        return self.spec.R

    @property
    def L(self) -> int:
        return self.codewords.shape[0]

    @property
    def T(self) -> int:
        return 2 * self.spec.R

    def diag_powers(self) -> np.ndarray:
        """Diagonals of ``D^k`` for every k, shape (L, 2R)."""
        return _roots(self.denominator)[self.exponents]


def _roots(n: int) -> np.ndarray:
    return np.exp(2j * np.pi * np.arange(n) / n)


def gbh_matrix(R: int, kind: str = "dft") -> np.ndarray:
    """R x R generalized Butson-Hadamard matrix.

    ``dft`` gives ``exp(j 2 pi p q / R)`` for any R; ``real_hadamard`` uses
    the Sylvester recursion and needs R to be a power of two.
    """
    if R < 1:
        raise ConstructionError("R must be >= 1")
    if kind == "dft":
        pq = np.outer(np.arange(R), np.arange(R)) % R
        return _roots(R)[pq]
    if kind == "real_hadamard":
        if not _is_power_of_two(R):
            raise ConstructionError(f"Sylvester-Hadamard matrix of order {R} does not exist")
        h = np.ones((1, 1), dtype=np.complex128)
        base = np.array([[1, 1], [1, -1]], dtype=np.complex128)
        while h.shape[0] < R:
            h = np.kron(base, h)
        return h
    raise ConstructionError(f"unknown GBH kind {kind!r}")


def build_gamma(M) -> np.ndarray:
    """Stack ``M`` on top of itself: the 2R x R matrix Gamma."""
    M = cl.as_matrix(M)
    if M.shape[0] != M.shape[1]:
        raise ConstructionError("M must be square")
    return np.vstack([M, M])


def relay_matrices(gamma, tol: float = 1e-12) -> list:
    """Diagonal relay matrices ``A_j = diag(gamma[:, j])``.

    Raises ConstructionError if any entry is not of unit modulus, since the
    relays must apply unitary maps.
    """
    gamma = cl.as_matrix(gamma)
    if np.max(np.abs(np.abs(gamma) - 1.0)) > tol:
        raise ConstructionError("Gamma has entries off the unit circle; relay matrices would not be unitary")
    return [np.diag(gamma[:, j]) for j in range(gamma.shape[1])]


def _spec_exponents(spec) -> tuple:
    """Integer exponent table (L, 2R) and its common denominator."""
    if isinstance(spec, CyclicCodeSpec):
        k = np.arange(spec.L)[:, None]
        return (k * np.asarray(spec.u)[None, :]) % spec.L, spec.L
    if isinstance(spec, AbelianCodeSpec):
        den = math.lcm(*spec.orders)
        scale = np.array([den // o for o in spec.orders])
        digits = np.array([spec.element(i) for i in range(spec.L)]).reshape(spec.L, spec.K)
        u = np.asarray(spec.u_matrix)  # (2R, K)
        return (digits @ (u * scale).T) % den, den
    raise TypeError(f"unsupported spec type {type(spec).__name__}")


def build_codebook(spec) -> Codebook:
    """Assemble GBH matrix, relay matrices and all L codewords of ``spec``."""
    R = spec.R
    M = gbh_matrix(R, spec.gbh_kind)
    gamma = build_gamma(M)
    relays = relay_matrices(gamma)
    exps, den = _spec_exponents(spec)
    d = _roots(den)[exps]
    words = d[:, :, None] * gamma[None, :, :] / math.sqrt(2 * R)
    x = np.full(2 * R, 1.0 / math.sqrt(2 * R), dtype=np.complex128)
    gram = np.conj(np.swapaxes(words, 1, 2)) @ words
    unitary = bool(np.max(np.abs(gram - np.eye(R))) <= 1e-12)
    return Codebook(spec, M, gamma, tuple(relays), exps, den, words, x, unitary)


def codeword(spec_or_book, k: int) -> np.ndarray:
    """Codeword ``S_k = D^k Gamma / sqrt(2R)`` (2R x R), k in 0..L-1."""
    book = spec_or_book if isinstance(spec_or_book, Codebook) else build_codebook(spec_or_book)
    if not 0 <= k < book.L:
        raise IndexError(f"codeword index {k} outside 0..{book.L - 1}")
    return book.codewords[k]


def codeword_by_relays(book: Codebook, k: int) -> np.ndarray:
    """Same codeword assembled column by column as ``[A_1 D^k x, ..., A_R D^k x]``."""
    if not 0 <= k < book.L:
        raise IndexError(f"codeword index {k} outside 0..{book.L - 1}")
    s = book.diag_powers()[k] * book.x
    return np.column_stack([A @ s for A in book.relay_matrices])


def is_fully_diverse_gcd(spec: CyclicCodeSpec) -> bool:
    """Full diversity test ``gcd(u_i - u_{R+i}, L) == 1`` for every relay i."""
    return all(math.gcd(vi, spec.L) == 1 for vi in spec.v)


@dataclass
class DiversityReport:
    fully_diverse: bool
    failing_pair: Optional[tuple]
    min_det: float
    coding_gain: float

    def as_rows(self) -> list:
        return [
            ("fully_diverse", self.fully_diverse),
            ("failing_pair", self.failing_pair),
            ("min_det", self.min_det),
            ("coding_gain", self.coding_gain),
        ]


def _phase_gain(book: Codebook) -> float:
    """Coding gain computed from the codebook exponents (works for abelian codes too)."""
    R, den = book.R, book.denominator
    if book.L < 2:
        return math.inf
    w = (book.exponents[:, :R] - book.exponents[:, R:]) % den  # (L, R)
    best = math.inf
    for l in range(1, book.L):
        diff = (w[l][None, :] - w[:l]) % den
        prod = np.prod(1.0 - np.cos(2 * np.pi * diff / den), axis=1)
        prod[np.any(diff == 0, axis=1)] = 0.0
        best = min(best, float(prod.min()))
    return best


def is_fully_diverse_bruteforce(book: Codebook, tol: float = cl.DEFAULT_TOL, max_L: int = DEFAULT_MAX_L) -> DiversityReport:
    """Scan every pair of codewords and test ``|S_pair^H S_pair| > tol``.

    ``S_pair = [S_l, S_lhat]`` for ``lhat < l``; the first failing pair in
    that order is reported.
    """
    L = book.L
    if L > max_L:
        raise ConfigurationError(f"L = {L} exceeds brute-force cap {max_L}")
    words = book.codewords
    min_det = math.inf
    failing = None
    for l in range(1, L):
        pair = np.concatenate([np.broadcast_to(words[l], words[:l].shape), words[:l]], axis=2)
        gram = cl.conj_transpose(pair) @ pair
        dets = np.real(cl.determinant(gram))
        min_det = min(min_det, float(dets.min()))
        if failing is None:
            bad = np.nonzero(dets <= tol)[0]
            if bad.size:
                failing = (l, int(bad[0]))
    report_gain = _phase_gain(book)
    return DiversityReport(failing is None, failing, min_det, report_gain)


def abelian_diversity_check(spec: AbelianCodeSpec) -> bool:
    """Exact full-diversity test for an abelian code.

    Fails as soon as some pair ``l != lhat`` and relay ``i`` give
    ``sum_nu (l_nu - lhat_nu)(u_{i,nu} - u_{R+i,nu}) / L_nu`` integral. The sum
    only depends on the digit-wise difference, so each nonzero difference
    class stands for all pairs that produce it.
    """
    R, orders = spec.R, spec.orders
    w = [
        [spec.u_matrix[i][nu] - spec.u_matrix[R + i][nu] for nu in range(spec.K)]
        for i in range(R)
    ]
    for diff in itertools.product(*(range(o) for o in orders)):
        if not any(diff):
            continue
        for i in range(R):
            s = sum(Fraction(d * w[i][nu], orders[nu]) for nu, d in enumerate(diff))
            if s.denominator == 1:
                return False
    return True


def pair_determinant_delta(spec: CyclicCodeSpec, l: int, lhat: int) -> tuple:
    """Closed-form ``|S^H S|`` of the juxtaposed pair and its factors.

    Returns ``(det, deltas)`` with ``deltas[i] = R (1 - cos(2 pi (l - lhat) v_i / L))``
    and ``det = (1 / 2R)^R * prod(deltas)``.
    """
    if l == lhat:
        raise ValueError("pair_determinant_delta needs two distinct codewords")
    R, L = spec.R, spec.L
    m = np.array([((l - lhat) * vi) % L for vi in spec.v])
    deltas = R * (1.0 - np.cos(2 * np.pi * m / L))
    deltas[m == 0] = 0.0
    return float((0.5 / R) ** R * np.prod(deltas)), deltas


def _gain_of(v: np.ndarray, L: int) -> np.ndarray:
    """Vectorized coding gain for candidate rows ``v`` (n, R)."""
    d = np.arange(1, L)
    m = (d[None, :, None] * v[:, None, :]) % L  # (n, L-1, R)
    terms = 1.0 - np.cos(2 * np.pi * m / L)
    terms[m == 0] = 0.0
    return np.prod(terms, axis=2).min(axis=1)


def coding_gain(spec: CyclicCodeSpec) -> float:
    """``min_{d != 0} prod_i [1 - cos(2 pi d v_i / L)]`` over difference classes d.

    Returns ``inf`` for a single-codeword code (no pairs).
    """
    if spec.L < 2:
        return math.inf
    return float(_gain_of(np.asarray([spec.v]), spec.L)[0])


def search_best_v(
    R: int,
    L: int,
    constraint: str = "none",
    max_L: int = DEFAULT_MAX_L,
    max_candidates: int = DEFAULT_MAX_CANDIDATES,
) -> tuple:
    """Exhaustive search for the difference vector with the largest coding gain.

    Candidates are unit vectors (every entry coprime to L) taken up to
    coordinate permutation and global negation. ``scalar`` restricts to
    ``v_1 = ... = v_R``. ``equal_tail`` does not restrict ``v`` (any v is
    realized with equal tail exponents, see :meth:`CyclicCodeSpec.from_v`).
    Ties go to the lexicographically smallest v.

    Returns
    -------
    v : tuple of int
    phi : float
    """
    if constraint not in CONSTRAINTS:
        raise ConfigurationError(f"unknown constraint {constraint!r}")
    if L > max_L:
        raise ConfigurationError(f"L = {L} exceeds search cap {max_L}")
    if L < 2:
        raise ConfigurationError("search needs L >= 2")
    units = [c for c in range(1, L) if math.gcd(c, L) == 1]
    if constraint == "scalar":
        cands = [(c,) * R for c in units if c <= L - c]
    else:
        if math.comb(len(units) + R - 1, R) > max_candidates:
            raise ConfigurationError(f"search space for R={R}, L={L} exceeds {max_candidates} candidates")
        cands = []
        for c in itertools.combinations_with_replacement(units, R):
            neg = tuple(sorted(L - x for x in c))
            if c <= neg:
                cands.append(c)
    # candidates arrive in lexicographic order, so only a strict improvement
    # (beyond rounding noise) may replace the incumbent
    best_v, best_phi = None, -1.0
    chunk = max(1, 2_000_000 // (L * R))
    for start in range(0, len(cands), chunk):
        block = np.asarray(cands[start:start + chunk])
        phis = _gain_of(block, L)
        for c, phi in zip(cands[start:start + chunk], phis):
            if phi > best_phi + _GAIN_RTOL * max(best_phi, 1e-300):
                best_v, best_phi = c, float(phi)
    return tuple(int(x) for x in best_v), best_phi


def surviving_codewords(book: Codebook, alive: Sequence[bool]) -> np.ndarray:
    """Codewords with the columns of silent relays removed, shape (L, 2R, #alive)."""
    alive = np.asarray(alive, dtype=bool)
    if alive.shape != (book.R,):
        raise ContractViolation(f"alive mask must have length R = {book.R}")
    return book.codewords[:, :, alive]


def pairwise_min_rank(words: np.ndarray, tol: float = cl.DEFAULT_TOL) -> int:
    """Smallest rank of ``[S_l, S_lhat]`` over all pairs ``l != lhat``."""
    L = words.shape[0]
    best = None
    for l in range(1, L):
        for lh in range(l):
            r = cl.rank(np.hstack([words[l], words[lh]]), tol)
            best = r if best is None else min(best, r)
    return best

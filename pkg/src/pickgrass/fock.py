"""Truncated Drury-Arveson space.

Polynomials of total degree <= N in d variables, with the Bombieri inner
product <z^a, z^b> = delta_ab a!/|a|!.  A :class:`BasisContext` fixes the
graded-lex ordering of monomials once per (d, N); dense operator matrices are
written in the orthonormal basis z^a / ||z^a||.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import DimensionMismatch, ValidationError, DegeneracyError

SINGULAR_TOL = 1e-14


def default_cap(d: int) -> int:
    return 60 if d <= 3 else 30


def multi_indices(d: int, n: int) -> list[tuple[int, ...]]:
    """All exponent tuples of total degree n, lexicographically descending."""
    if d == 1:
        return [(n,)]
    out = []
    for first in range(n, -1, -1):
        for rest in multi_indices(d - 1, n - first):
            out.append((first,) + rest)
    return out


def mfact(alpha: Sequence[int]) -> int:
    return math.prod(math.factorial(a) for a in alpha)


def bombieri_norm_sq(alpha: Sequence[int]) -> float:
    return mfact(alpha) / math.factorial(sum(alpha))


class BasisContext:
    """Graded-lex monomial basis of C[z_1..z_d]_{<= N}."""

    def __init__(self, d: int, N: int):
        if d < 1 or N < 0:
            raise ValidationError("need d >= 1 and N >= 0")
        self.d = d
        self.N = N
        self.indices: list[tuple[int, ...]] = [a for m in range(N + 1) for a in multi_indices(d, m)]
        self.position = {a: i for i, a in enumerate(self.indices)}
        self.degrees = np.array([sum(a) for a in self.indices])
        self.norms = np.sqrt([bombieri_norm_sq(a) for a in self.indices])
        self.exponents = np.array(self.indices, dtype=int).reshape(len(self.indices), d)

    @property
    def dim(self) -> int:
        return len(self.indices)

    def degree_slice(self, m: int) -> slice:
        """Positions of the homogeneous component of degree m."""
        start = math.comb(m - 1 + self.d, self.d) if m > 0 else 0
        return slice(start, math.comb(m + self.d, self.d))

    def __repr__(self) -> str:
        return f"BasisContext(d={self.d}, N={self.N}, dim={self.dim})"


@lru_cache(maxsize=64)
def basis(d: int, N: int) -> BasisContext:
    return BasisContext(d, N)


@dataclass
class TruncVec:
    """Element of H^2_d truncated to degree <= N, stored as monomial coefficients."""

    d: int
    N: int
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.shape != (basis(self.d, self.N).dim,):
            raise ValidationError("coefficient vector does not match the (d, N) basis")

    @property
    def ctx(self) -> BasisContext:
        return basis(self.d, self.N)

    @classmethod
    def zero(cls, d: int, N: int) -> "TruncVec":
        return cls(d, N, np.zeros(basis(d, N).dim, dtype=complex))

    @classmethod
    def monomial(cls, alpha: Sequence[int], N: int, coeff: complex = 1.0) -> "TruncVec":
        alpha = tuple(int(a) for a in alpha)
        v = cls.zero(len(alpha), N)
        if sum(alpha) > N:
            raise ValidationError("monomial degree exceeds the cap")
        v.coeffs[v.ctx.position[alpha]] = coeff
        return v

    @classmethod
    def from_terms(cls, d: int, N: int, terms: dict) -> "TruncVec":
        v = cls.zero(d, N)
        for alpha, c in terms.items():
            alpha = tuple(alpha)
            if len(alpha) != d:
                raise DimensionMismatch("multi-index length differs from d")
            if sum(alpha) > N:
                raise ValidationError(f"term {alpha} exceeds degree cap {N}")
            v.coeffs[v.ctx.position[alpha]] += c
        return v

    @classmethod
    def from_on(cls, d: int, N: int, on: np.ndarray) -> "TruncVec":
        return cls(d, N, np.asarray(on) / basis(d, N).norms)

    def on(self) -> np.ndarray:
        """Coordinates in the orthonormal monomial basis."""
        return self.coeffs * self.ctx.norms

    def terms(self) -> dict[tuple[int, ...], complex]:
        return {a: complex(c) for a, c in zip(self.ctx.indices, self.coeffs) if c != 0}

    @property
    def degree(self) -> int:
        nz = np.nonzero(self.coeffs)[0]
        return int(self.ctx.degrees[nz].max()) if nz.size else 0

    def inner(self, other: "TruncVec") -> complex:
        """<self, other> in the Bombieri inner product."""
        _check_compatible(self, other)
        return complex(np.vdot(other.on(), self.on()))

    def norm(self) -> float:
        return float(np.linalg.norm(self.on()))

    def __call__(self, z) -> complex:
        z = np.asarray(z, dtype=complex)
        vals = np.prod(z[None, :] ** self.ctx.exponents, axis=1)
        return complex(vals @ self.coeffs)

    def __add__(self, other: "TruncVec") -> "TruncVec":
        _check_compatible(self, other)
        return TruncVec(self.d, self.N, self.coeffs + other.coeffs)

    def __sub__(self, other: "TruncVec") -> "TruncVec":
        _check_compatible(self, other)
        return TruncVec(self.d, self.N, self.coeffs - other.coeffs)

    def __rmul__(self, c) -> "TruncVec":
        return TruncVec(self.d, self.N, complex(c) * self.coeffs)

    def __mul__(self, other):
        if isinstance(other, TruncVec):
            return multiply(self, other)
        return TruncVec(self.d, self.N, complex(other) * self.coeffs)

    def truncate(self, N: int) -> "TruncVec":
        """Re-express with a different degree cap (drops or pads terms)."""
        out = TruncVec.zero(self.d, N)
        m = min(N, self.N)
        k = basis(self.d, m).dim
        out.coeffs[:k] = self.coeffs[:k]
        return out


def _check_compatible(f: TruncVec, g: TruncVec) -> None:
    if f.d != g.d or f.N != g.N:
        raise DimensionMismatch(f"incompatible truncated vectors: (d={f.d}, N={f.N}) vs (d={g.d}, N={g.N})")


def multiply(f: TruncVec, g: TruncVec) -> TruncVec:
    """trunc_N(f g).  Exact: degrees above N never feed back below N."""
    _check_compatible(f, g)
    ctx = f.ctx
    out = np.zeros(ctx.dim, dtype=complex)
    fi = np.nonzero(f.coeffs)[0]
    gi = np.nonzero(g.coeffs)[0]
    pos = ctx.position
    for i in fi:
        ai = ctx.indices[i]
        room = ctx.N - ctx.degrees[i]
        for j in gi:
            if ctx.degrees[j] > room:
                continue
            aj = ctx.indices[j]
            out[pos[tuple(x + y for x, y in zip(ai, aj))]] += f.coeffs[i] * g.coeffs[j]
    return TruncVec(f.d, f.N, out)


# ---------------------------------------------------------------------------
# Kernels


def kernel_derivative_eval(alpha: Sequence[int], beta: Sequence[int], z, w) -> complex:
    """d^beta/dz^beta d^alpha/d(conj w)^alpha of k(z, w) = 1/(1 - <z, w>).

    Leibniz expansion of the closed form

        d^alpha_{conj w} k = |alpha|! z^alpha (1 - <z,w>)^{-|alpha|-1}

    followed by d^beta_z, giving a finite sum over gamma <= min(alpha, beta).
    For beta = 0 this is the derivative kernel k_w^{(alpha)} evaluated at z.
    """
    z = np.asarray(z, dtype=complex).ravel()
    w = np.asarray(w, dtype=complex).ravel()
    alpha = tuple(int(a) for a in alpha)
    beta = tuple(int(b) for b in beta)
    if not (z.size == w.size == len(alpha) == len(beta)):
        raise DimensionMismatch("z, w, alpha, beta must share the dimension d")
    one_minus = 1.0 - complex(np.dot(z, np.conj(w)))
    if abs(one_minus) < SINGULAR_TOL:
        raise DegeneracyError("|1 - <z, w>| below 1e-14: kernel evaluation is singular")
    wc = np.conj(w)
    na, nb = sum(alpha), sum(beta)
    total = 0j
    for gamma in _box(tuple(min(a, b) for a, b in zip(alpha, beta))):
        ng = sum(gamma)
        coef = 1.0
        for a, b, g in zip(alpha, beta, gamma):
            coef *= math.comb(b, g) * math.factorial(a) / math.factorial(a - g)
        order = na + nb - ng
        mono = 1.0 + 0j
        for zi, wi, a, b, g in zip(z, wc, alpha, beta, gamma):
            mono *= zi ** (a - g) * wi ** (b - g)
        total += coef * math.factorial(order) * mono / one_minus ** (order + 1)
    return complex(total)


def _box(upper: tuple[int, ...]):
    if not upper:
        yield ()
        return
    for g in range(upper[0] + 1):
        for rest in _box(upper[1:]):
            yield (g,) + rest


def kernel_eval(z, w) -> complex:
    return kernel_derivative_eval((0,) * np.size(z), (0,) * np.size(z), z, w)


def kernel_tail_bound(lam, alpha: Sequence[int], N: int) -> float:
    """Upper bound on ||k_lam^{(alpha)} - trunc_N k_lam^{(alpha)}||.

    The degree-m part of k_lam^{(alpha)} is m!/(m-n)! z^alpha <z, lam>^{m-n}
    with n = |alpha|; multiplication by z^alpha is contractive, so its norm is
    at most m!/(m-n)! ||lam||^{m-n}.
    """
    r = float(np.linalg.norm(lam))
    n = sum(alpha)
    if r == 0.0:
        return 0.0
    if r >= 1.0:
        return math.inf
    acc = 0.0
    m = max(N + 1, n)
    while True:
        term = (math.perm(m, n) * r ** (m - n)) ** 2
        acc += term
        if term < 1e-40 * max(acc, 1e-300) or m > N + 20000:
            break
        m += 1
    return math.sqrt(acc)


def kernel_coefficients(lam, alpha: Sequence[int], N: int) -> tuple[TruncVec, float]:
    """Truncation of k_lam^{(alpha)} to degree <= N plus a bound on the dropped tail.

    Coefficients come from applying d^alpha_{conj w} termwise to
    k_lam(z) = sum_g |g|!/g! conj(lam)^g z^g.
    """
    lam = np.asarray(lam, dtype=complex).ravel()
    alpha = tuple(int(a) for a in alpha)
    d = lam.size
    if len(alpha) != d:
        raise DimensionMismatch("alpha and lam differ in dimension")
    ctx = basis(d, N)
    lc = np.conj(lam)
    out = np.zeros(ctx.dim, dtype=complex)
    for i, g in enumerate(ctx.indices):
        if any(gi < ai for gi, ai in zip(g, alpha)):
            continue
        c = math.factorial(sum(g)) / mfact(g)
        for gi, ai, li in zip(g, alpha, lc):
            c *= math.perm(gi, ai) * li ** (gi - ai)
        out[i] = c
    return TruncVec(d, N, out), kernel_tail_bound(lam, alpha, N)


@dataclass(frozen=True)
class KernelDescriptor:
    """Exact derivative kernel k_lam^{(alpha)} (no truncation)."""

    lam: tuple
    alpha: tuple

    @classmethod
    def of(cls, lam, alpha: Sequence[int] | None = None) -> "KernelDescriptor":
        lam = tuple(complex(c) for c in np.asarray(lam, dtype=complex).ravel())
        alpha = tuple(int(a) for a in alpha) if alpha is not None else (0,) * len(lam)
        if len(alpha) != len(lam):
            raise DimensionMismatch("alpha and lam differ in dimension")
        return cls(lam, alpha)

    @property
    def d(self) -> int:
        return len(self.lam)

    def __call__(self, z) -> complex:
        return kernel_derivative_eval(self.alpha, (0,) * self.d, z, self.lam)


Vector = Union[TruncVec, KernelDescriptor]


def _derivative_of(f: TruncVec, alpha: tuple, lam) -> complex:
    """d^alpha f (lam) for a polynomial f."""
    lam = np.asarray(lam, dtype=complex)
    ctx = f.ctx
    total = 0j
    for a, c in zip(ctx.indices, f.coeffs):
        if c == 0 or any(x < y for x, y in zip(a, alpha)):
            continue
        term = c
        for x, y, li in zip(a, alpha, lam):
            term *= math.perm(x, y) * li ** (x - y)
        total += term
    return complex(total)


def inner_product(f: Vector, g: Vector) -> complex:
    """<f, g> for truncated vectors and/or exact kernel descriptors."""
    if isinstance(f, TruncVec) and isinstance(g, TruncVec):
        return f.inner(g)
    if isinstance(g, KernelDescriptor) and isinstance(f, KernelDescriptor):
        if f.d != g.d:
            raise DimensionMismatch("mixed dimensions")
        return kernel_derivative_eval(f.alpha, g.alpha, g.lam, f.lam)
    if isinstance(g, KernelDescriptor):
        if f.d != g.d:
            raise DimensionMismatch("mixed dimensions")
        return _derivative_of(f, g.alpha, g.lam)
    return complex(np.conj(inner_product(g, f)))


def gram_matrix(vectors: Iterable[Vector]) -> np.ndarray:
    """G[i, j] = <v_j, v_i>, Hermitian positive semidefinite."""
    vs = list(vectors)
    if len({v.d for v in vs}) > 1:
        raise DimensionMismatch("gram_matrix called with mixed dimensions")
    if vs and all(isinstance(v, TruncVec) for v in vs):
        V = np.column_stack([v.on() for v in vs])
        return V.conj().T @ V
    n = len(vs)
    G = np.empty((n, n), dtype=complex)
    for i in range(n):
        for j in range(i, n):
            G[i, j] = inner_product(vs[j], vs[i])
            G[j, i] = np.conj(G[i, j])
    return G


# ---------------------------------------------------------------------------
# Operators


def multiplication_matrix(f: TruncVec, N: int | None = None) -> np.ndarray:
    """Matrix of g -> trunc_N(f g) in the orthonormal monomial basis of degree <= N."""
    N = f.N if N is None else N
    if f.degree > N:
        raise ValidationError(f"symbol degree {f.degree} exceeds the cap {N}")
    f = f.truncate(N)
    ctx = basis(f.d, N)
    M = np.zeros((ctx.dim, ctx.dim), dtype=complex)
    pos = ctx.position
    for gi in np.nonzero(f.coeffs)[0]:
        gamma = ctx.indices[gi]
        c = f.coeffs[gi]
        dg = ctx.degrees[gi]
        for j, beta in enumerate(ctx.indices):
            if ctx.degrees[j] + dg > N:
                break
            i = pos[tuple(x + y for x, y in zip(gamma, beta))]
            M[i, j] += c * ctx.norms[i] / ctx.norms[j]
    return M


@lru_cache(maxsize=32)
def _shift_cache(d: int, N: int) -> tuple:
    out = []
    for j in range(d):
        e = [0] * d
        e[j] = 1
        M = multiplication_matrix(TruncVec.monomial(e, N), N)
        M.setflags(write=False)
        out.append(M)
    return tuple(out)


def shift_matrices(d: int, N: int) -> list[np.ndarray]:
    """Truncated M_{z_1}, ..., M_{z_d} (read-only, shared per (d, N))."""
    return list(_shift_cache(d, N))


def projection_onto(vectors: Sequence[TruncVec]) -> np.ndarray:
    """Orthogonal projection (orthonormal basis coordinates) onto span(vectors)."""
    V = np.column_stack([v.on() for v in vectors])
    Q, _ = np.linalg.qr(V)
    return Q @ Q.conj().T

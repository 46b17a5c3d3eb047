"""Row-valued Blaschke products on the ball.

The chain for points lam_1..lam_n starts from the involution phi_{lam_1}
(a row of d functions) and at step m multiplies on the right by a unitary
U_m and the block diagonal diag(phi_{lam_m}, I).  The first column of U_m
is fixed by the previous partial product at lam_m, which forces the new
row to vanish there as well.  The output row has (n-1)(d-1)+d entries.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ball import Divisor, as_point, inner, mobius_involution
from .errors import DegeneracyError, DimensionMismatch, OutsideBall, ValidationError
from .fock import TruncVec, kernel_coefficients, kernel_eval, multiplication_matrix, basis

BOUNDARY_RADIUS = 0.95
SEPARATION_TOL = 1e-10


def householder_completion(x: np.ndarray) -> np.ndarray:
    """Unitary U with U e_1 = x for a unit vector x.

    A reflection sending x to a unimodular multiple of e_1, with the sign
    chosen to avoid cancellation, followed by a phase on the first column.
    """
    x = np.asarray(x, dtype=complex)
    k = x.size
    x1 = x[0]
    theta = x1 / abs(x1) if abs(x1) > 0 else 1.0 + 0j
    u = x.copy()
    u[0] += theta
    H = np.eye(k, dtype=complex) - 2.0 * np.outer(u, u.conj()) / np.vdot(u, u).real
    # H x = -theta e_1, hence H e_1 = -x / theta
    H[:, 0] *= -theta
    return H


def chain_width(d: int, n: int) -> int:
    return (n - 1) * (d - 1) + d


@dataclass(frozen=True)
class BlaschkeChain:
    """The ordered base points and completion unitaries of b_X."""

    d: int
    points: tuple  # tuple of complex numpy vectors
    unitaries: tuple  # unitaries[m] for step m+1; unitaries[0] is None

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def width(self) -> int:
        return chain_width(self.d, self.n)

    def __call__(self, z) -> np.ndarray:
        return evaluate_blaschke(self, z)

    def series(self, N: int) -> tuple[list[TruncVec], list[float]]:
        return blaschke_series(self, N)


@dataclass(frozen=True)
class ClassicalBlaschke:
    """Scalar product prod_j ((z - lam_j) / (1 - conj(lam_j) z))^{n_j} on the disc."""

    points: tuple  # complex scalars
    mults: tuple

    d = 1

    @classmethod
    def from_divisor(cls, X: Divisor) -> "ClassicalBlaschke":
        if X.d != 1:
            raise DimensionMismatch("the classical product lives on the disc (d = 1)")
        return cls(tuple(complex(p[0]) for p in X.points), tuple(X.multiplicities))

    @property
    def width(self) -> int:
        return 1

    @property
    def n(self) -> int:
        return sum(self.mults)

    def __call__(self, z) -> np.ndarray:
        z = complex(as_point(z, 1)[0])
        val = 1.0 + 0j
        for lam, m in zip(self.points, self.mults):
            val *= ((z - lam) / (1 - np.conj(lam) * z)) ** m
        return np.array([val])

    def series(self, N: int) -> tuple[list[TruncVec], list[float]]:
        if N < 1:
            raise ValidationError("degree cap must be at least 1")
        out = TruncVec.monomial((0,), N)
        tail = 0.0
        for lam, m in zip(self.points, self.mults):
            k, t = kernel_coefficients([lam], (0,), N)
            factor = TruncVec.from_terms(1, N, {(0,): -lam, (1,): 1.0}) * k
            for _ in range(m):
                out = out * factor
                tail += 2.0 * t
        return [out], [tail]


def build_blaschke(X, allow_near_boundary: bool = False) -> BlaschkeChain:
    """Build the chain for a divisor (canonical order) or an ordered point list."""
    if isinstance(X, Divisor):
        if not X.multiplicity_free:
            raise ValidationError("the chain needs distinct points; X has a multiple point")
        pts = X.points
    else:
        pts = [as_point(p) for p in X]
    if not pts:
        raise ValidationError("empty point list")
    d = pts[0].size
    for p in pts:
        if p.size != d:
            raise DimensionMismatch("points of mixed dimension")
        if not allow_near_boundary and np.linalg.norm(p) > BOUNDARY_RADIUS:
            raise OutsideBall(f"point with norm {np.linalg.norm(p):.4f} > {BOUNDARY_RADIUS}; pass allow_near_boundary")
    for i in range(len(pts)):
        for j in range(i):
            if np.linalg.norm(pts[i] - pts[j]) <= SEPARATION_TOL:
                raise ValidationError(f"coincident points at positions {j} and {i}")

    unitaries: list = [None]
    chain = BlaschkeChain(d, (pts[0],), (None,))
    for m in range(1, len(pts)):
        v = evaluate_blaschke(chain, pts[m])
        nv = np.linalg.norm(v)
        if nv < 1e-12:
            raise DegeneracyError(
                "partial product vanishes at the next base point", {"step": m, "norm": float(nv)}
            )
        unitaries.append(householder_completion(v.conj() / nv))
        chain = BlaschkeChain(d, tuple(pts[: m + 1]), tuple(unitaries))
    return chain


def evaluate_blaschke(b: BlaschkeChain, z) -> np.ndarray:
    """b(z) as a complex row of width (n-1)(d-1)+d, by exact products."""
    z = as_point(z)
    if z.size != b.d:
        raise DimensionMismatch(f"chain lives in C^{b.d}, point in C^{z.size}")
    row = mobius_involution(b.points[0], z)
    for lam, U in zip(b.points[1:], b.unitaries[1:]):
        t = row @ U
        row = np.concatenate([t[0] * mobius_involution(lam, z), t[1:]])
    return row


def one_step_defect(lam, z, w) -> complex:
    """(1 - |lam|^2)(1 - <z,w>) / ((1 - <z,lam>)(1 - <lam,w>)), which equals 1 - phi(z)phi(w)^*."""
    lam, z, w = as_point(lam), as_point(z), as_point(w)
    r2 = np.vdot(lam, lam).real
    return (1 - r2) * (1 - inner(z, w)) / ((1 - inner(z, lam)) * (1 - inner(lam, w)))


def _involution_series(lam: np.ndarray, N: int) -> tuple[list[TruncVec], float]:
    """Taylor coefficients of the components of phi_lam to degree N.

    phi_lam(z) = (lam - A z) k_lam(z) with A = P + s(I - P); the affine
    numerator times the truncated geometric series is exact to degree N.
    """
    d = lam.size
    r2 = np.vdot(lam, lam).real
    if r2 == 0.0:
        # phi_0(z) = -z
        comps = []
        for i in range(d):
            e = [0] * d
            e[i] = 1
            comps.append(TruncVec.monomial(e, N, -1.0))
        return comps, 0.0
    P = np.outer(lam, lam.conj()) / r2
    A = P + np.sqrt(1 - r2) * (np.eye(d) - P)
    k, tail = kernel_coefficients(lam, (0,) * d, N)
    comps = []
    for i in range(d):
        terms = {(0,) * d: lam[i]}
        for j in range(d):
            e = [0] * d
            e[j] = 1
            terms[tuple(e)] = -A[i, j]
        num = TruncVec.from_terms(d, N, terms)
        comps.append(num * k)
    # numerator is a multiplier of norm at most |lam_i| + ||A_i|| <= 2
    return comps, 2.0 * tail


def blaschke_series(b: BlaschkeChain, N: int) -> tuple[list[TruncVec], list[float]]:
    """Components of b truncated to degree N, with propagated tail estimates.

    The row is a contractive multiplier at every stage, so dropped tails add
    up along the chain.
    """
    if N < 1:
        raise ValidationError("degree cap must be at least 1")
    row, tail = _involution_series(b.points[0], N)
    tails = [tail] * len(row)
    for lam, U in zip(b.points[1:], b.unitaries[1:]):
        phi, t_phi = _involution_series(lam, N)
        mixed = []
        for c in range(U.shape[1]):
            acc = TruncVec.zero(b.d, N)
            for r, f in enumerate(row):
                if U[r, c] != 0:
                    acc = acc + U[r, c] * f
            mixed.append(acc)
        t_prev = max(tails)
        row = [mixed[0] * f for f in phi] + mixed[1:]
        tails = [t_prev + t_phi] * len(phi) + [t_prev] * (len(mixed) - 1)
    return row, tails


def truncated_multiplier_matrix(b, N: int) -> tuple[list[np.ndarray], list[float]]:
    """Block row [M_{b_1}, ..., M_{b_w}] on polynomials of degree <= N plus tail estimates.

    Since M_f^* preserves degree <= N, sum_i M_{b_i} M_{b_i}^* built from these
    blocks is exactly the compression of M_b M_b^* to degree <= N.
    """
    comps, tails = b.series(N)
    return [multiplication_matrix(f, N) for f in comps], tails


def defect_projection(b, N: int) -> np.ndarray:
    """I - M_b M_b^* on degree <= N in the orthonormal monomial basis."""
    blocks, _ = truncated_multiplier_matrix(b, N)
    dim = basis(b.d, N).dim
    out = np.eye(dim, dtype=complex)
    for M in blocks:
        out -= M @ M.conj().T
    return out


def schur_kernel(b, zs: Sequence) -> np.ndarray:
    """Matrix (1 - b(z_i) b(z_j)^*) k(z_i, z_j) over sample points."""
    rows = [b(z) for z in zs]
    n = len(zs)
    K = np.empty((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            K[i, j] = (1 - np.dot(rows[i], rows[j].conj())) * kernel_eval(zs[i], zs[j])
    return K

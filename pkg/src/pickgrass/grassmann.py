"""Finite-dimensional multiplier-coinvariant subspaces and the maps Psi, Phi.

A subspace is modelled exactly, with no truncation: each group holds a base
point lam and vectors that are finite combinations sum_a c_a k_lam^{(a)} of
derivative kernels.  Inner products come from the closed-form derivative
kernel, and M_{z_j}^* acts on a derivative kernel by the lowering rule

    M_{z_j}^* k_lam^{(a)} = conj(lam_j) k_lam^{(a)} + a_j k_lam^{(a - e_j)}.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .ball import (
    BallAutomorphism,
    Divisor,
    as_point,
    optimal_matching_distance,
    random_ball_point,
)
from .blaschke import ClassicalBlaschke, build_blaschke, defect_projection
from .errors import DegeneracyError, DimensionMismatch, Unsupported, ValidationError
from .fock import TruncVec, kernel_coefficients, kernel_derivative_eval, kernel_eval, projection_onto
from .spectra import DEFAULT_SEED, CommutingTuple, joint_spectrum

GRAM_COND_WARN = 1e10
GRAM_BASIS_SWITCH = 1e4
LSQ_TOL = 1e-10

Coeffs = dict  # multi-index tuple -> complex


def _unit(d: int, j: int) -> tuple[int, ...]:
    return tuple(1 if i == j else 0 for i in range(d))


def lower(v: Coeffs, lam: np.ndarray, j: int) -> Coeffs:
    """Coefficients of M_{z_j}^* applied to sum_a v[a] k_lam^{(a)}."""
    out: dict = {}
    for a, c in v.items():
        out[a] = out.get(a, 0) + np.conj(lam[j]) * c
        if a[j] > 0:
            b = a[:j] + (a[j] - 1,) + a[j + 1 :]
            out[b] = out.get(b, 0) + a[j] * c
    return out


@dataclass(frozen=True, eq=False)
class Group:
    lam: np.ndarray
    vectors: tuple  # tuple of Coeffs

    def indices(self) -> list[tuple[int, ...]]:
        keys = set()
        for v in self.vectors:
            keys.update(v)
        return sorted(keys, key=lambda a: (sum(a), tuple(-x for x in a)))

    def coefficient_matrix(self, rows: list[tuple[int, ...]]) -> np.ndarray:
        return np.array([[v.get(a, 0) for v in self.vectors] for a in rows], dtype=complex).reshape(
            len(rows), len(self.vectors)
        )


@dataclass(frozen=True, eq=False)
class CoinvariantModel:
    """Span of derivative-kernel combinations grouped by base point."""

    d: int
    groups: tuple
    gram: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        pts = []
        for g in self.groups:
            if g.lam.size != self.d:
                raise DimensionMismatch("group base point has the wrong dimension")
            if not g.vectors:
                raise ValidationError("empty group")
            for v in g.vectors:
                for a in v:
                    if len(a) != self.d or min(a) < 0:
                        raise ValidationError(f"bad multi-index {a}")
            pts.append(g.lam)
        for i in range(len(pts)):
            for j in range(i):
                if np.linalg.norm(pts[i] - pts[j]) < 1e-12:
                    raise ValidationError("two groups share a base point")
        G = _gram(self.flat())
        object.__setattr__(self, "gram", G)

    # construction helpers
    @classmethod
    def from_groups(cls, groups: Sequence) -> "CoinvariantModel":
        """``groups``: iterable of (lam, [ {alpha: coeff}, ... ])."""
        gs = []
        d = None
        for lam, vecs in groups:
            lam = as_point(lam)
            d = lam.size if d is None else d
            vs = tuple({tuple(int(x) for x in a): complex(c) for a, c in v.items() if c != 0} for v in vecs)
            gs.append(Group(lam, vs))
        if d is None:
            raise ValidationError("a model needs at least one group")
        return cls(d, tuple(gs))

    @classmethod
    def kernel_span(cls, points) -> "CoinvariantModel":
        pts = points.points if isinstance(points, Divisor) else [as_point(p) for p in points]
        d = pts[0].size
        return cls.from_groups([(p, [{(0,) * d: 1.0}]) for p in pts])

    @classmethod
    def jet(cls, lam, n: int, direction: int = 0) -> "CoinvariantModel":
        """span{k_lam^{(l e_j)} : 0 <= l < n}, an n-dimensional model supported at lam."""
        lam = as_point(lam)
        d = lam.size
        vecs = []
        for ell in range(n):
            a = [0] * d
            a[direction] = ell
            vecs.append({tuple(a): 1.0})
        return cls.from_groups([(lam, vecs)])

    @classmethod
    def from_divisor_d1(cls, X: Divisor) -> "CoinvariantModel":
        """d = 1: kernels and derivative kernels k^{(l)}, l < n_j, at each point."""
        if X.d != 1:
            raise DimensionMismatch("from_divisor_d1 needs d = 1")
        return cls.from_groups([(p, [{(ell,): 1.0} for ell in range(m)]) for p, m in zip(X.points, X.multiplicities)])

    @property
    def dim(self) -> int:
        return sum(len(g.vectors) for g in self.groups)

    @property
    def multiplicity_free(self) -> bool:
        return all(len(g.vectors) == 1 and set(g.vectors[0]) == {(0,) * self.d} for g in self.groups)

    def flat(self) -> list[tuple[np.ndarray, Coeffs]]:
        return [(g.lam, v) for g in self.groups for v in g.vectors]

    def evaluate(self, z) -> np.ndarray:
        """Values v_i(z) of all model vectors."""
        z = as_point(z, self.d)
        zero = (0,) * self.d
        return np.array(
            [sum(c * kernel_derivative_eval(a, zero, z, lam) for a, c in v.items()) for lam, v in self.flat()]
        )

    def reproducing_kernel(self, z, w) -> complex:
        """Kernel of the orthogonal projection onto the model span."""
        vz, vw = self.evaluate(z), self.evaluate(w)
        dg = _diag_scale(self.gram)
        Gs = self.gram * np.outer(dg, dg)
        return complex((vz * dg) @ np.linalg.solve(Gs, dg * vw.conj()))

    def truncated(self, N: int) -> list[TruncVec]:
        out = []
        for lam, v in self.flat():
            acc = TruncVec.zero(self.d, N)
            for a, c in v.items():
                k, _ = kernel_coefficients(lam, a, N)
                acc = acc + c * k
            out.append(acc)
        return out


def _diag_scale(G: np.ndarray) -> np.ndarray:
    return 1.0 / np.sqrt(np.diag(G).real)


def scaled_condition(G: np.ndarray) -> float:
    """Condition number of G after scaling to unit diagonal."""
    dg = _diag_scale(G)
    return float(np.linalg.cond(G * np.outer(dg, dg)))


def _pair_inner(u: tuple, v: tuple) -> complex:
    """<u, v> for formal vectors (lam, coeffs)."""
    lu, cu = u
    lv, cv = v
    total = 0j
    for a, x in cu.items():
        for b, y in cv.items():
            total += x * np.conj(y) * kernel_derivative_eval(a, b, lv, lu)
    return complex(total)


def _gram(vectors: list) -> np.ndarray:
    n = len(vectors)
    G = np.empty((n, n), dtype=complex)
    for i in range(n):
        for j in range(i, n):
            G[i, j] = _pair_inner(vectors[j], vectors[i])
            G[j, i] = np.conj(G[i, j])
    return G


def formal_inner(u: Sequence, v: Sequence) -> complex:
    """<u, v> for lists of (lam, alpha, coeff) derivative-kernel terms."""
    total = 0j
    for lu, a, x in u:
        for lv, b, y in v:
            total += x * np.conj(y) * kernel_derivative_eval(a, b, np.asarray(lv, complex), np.asarray(lu, complex))
    return complex(total)


# ---------------------------------------------------------------------------
# Validation and Psi


def _in_span(V: np.ndarray, x: np.ndarray) -> tuple[bool, np.ndarray]:
    if V.size == 0:
        return (np.linalg.norm(x) <= LSQ_TOL, np.zeros(0))
    c, *_ = np.linalg.lstsq(V, x, rcond=None)
    res = np.linalg.norm(V @ c - x)
    return res <= LSQ_TOL * max(1.0, np.linalg.norm(x)), c


def validate_coinvariant_model(m: CoinvariantModel) -> dict:
    """Check kernel membership and closure under all lowering maps, per group."""
    zero = (0,) * m.d
    for gi, g in enumerate(m.groups):
        rows = g.indices()
        if zero not in rows:
            rows = [zero] + rows
        V = g.coefficient_matrix(rows)
        if np.linalg.matrix_rank(V, tol=LSQ_TOL * max(1.0, np.abs(V).max())) < V.shape[1]:
            return {"valid": False, "witness": f"group {gi}: vectors are linearly dependent"}
        e0 = np.array([1.0 if a == zero else 0.0 for a in rows], dtype=complex)
        if not _in_span(V, e0)[0]:
            return {"valid": False, "witness": f"group {gi}: k_lam is not in the span"}
        for vi, v in enumerate(g.vectors):
            for j in range(m.d):
                low = lower(v, g.lam, j)
                extra = [a for a, c in low.items() if a not in rows and abs(c) > 0]
                if extra:
                    return {
                        "valid": False,
                        "witness": f"group {gi}, vector {vi}: lowering by z_{j + 1} leaves the span (index {extra[0]})",
                    }
                x = np.array([low.get(a, 0) for a in rows], dtype=complex)
                if not _in_span(V, x)[0]:
                    return {
                        "valid": False,
                        "witness": f"group {gi}, vector {vi}: lowering by z_{j + 1} leaves the span",
                    }
    # judged after scaling to unit diagonal: derivative kernels of different
    # orders have wildly different norms without spanning anything less
    dg = _diag_scale(m.gram)
    eig = np.linalg.eigvalsh(m.gram * np.outer(dg, dg))
    if eig[0] <= 1e-12 * eig[-1]:
        return {"valid": False, "witness": "Gram matrix is not positive definite"}
    return {"valid": True, "witness": None}


def lowering_matrices(m: CoinvariantModel) -> list[np.ndarray]:
    """C_j with M_{z_j}^* v_k = sum_i C_j[i, k] v_i in the model basis."""
    n = m.dim
    Cs = [np.zeros((n, n), dtype=complex) for _ in range(m.d)]
    offset = 0
    for g in m.groups:
        rows = g.indices()
        V = g.coefficient_matrix(rows)
        k = V.shape[1]
        for j in range(m.d):
            L = np.column_stack(
                [np.array([lower(v, g.lam, j).get(a, 0) for a in rows], dtype=complex) for v in g.vectors]
            )
            X, *_ = np.linalg.lstsq(V, L, rcond=None)
            Cs[j][offset : offset + k, offset : offset + k] = X
        offset += k
    return Cs


def compressed_tuple(m: CoinvariantModel) -> CommutingTuple:
    """The compression of M_z to the model span, A_j = G^{-1} C_j^* G.

    Forming G^{-1} C^* G loses about cond(G) * eps, so above GRAM_BASIS_SWITCH
    the compression is written in the basis biorthogonal to the model
    vectors instead, where its matrix is exactly C_j^* and no Gram solve is
    needed.  The switch looks at the unscaled condition number too, since
    the similarity mixes derivative orders whose norms differ by factorials.
    """
    G = m.gram
    Cs = lowering_matrices(m)
    cond = scaled_condition(G)
    if cond > GRAM_COND_WARN:
        warnings.warn(f"model Gram condition number {cond:.2e}", RuntimeWarning)
    if max(cond, np.linalg.cond(G)) > GRAM_BASIS_SWITCH:
        return CommutingTuple(np.array([C.conj().T for C in Cs]))
    return CommutingTuple(np.array([np.linalg.solve(G, C.conj().T @ G) for C in Cs]))


def psi(m: CoinvariantModel, seed: int = DEFAULT_SEED) -> Divisor:
    """Joint spectrum, with multiplicity, of the compressed shift on the model."""
    rep = validate_coinvariant_model(m)
    if not rep["valid"]:
        raise ValidationError(f"invalid coinvariant model: {rep['witness']}")
    return joint_spectrum(compressed_tuple(m), seed=seed)


# ---------------------------------------------------------------------------
# Phi


@dataclass(frozen=True, eq=False)
class PhiResult:
    chain: object  # BlaschkeChain or ClassicalBlaschke
    model: CoinvariantModel
    projection: np.ndarray | None = None


def phi(X: Divisor, N: int | None = None) -> PhiResult:
    """Blaschke product and complement model for X; optionally I - M_b M_b^* truncated to degree N."""
    if X.d == 1:
        chain = ClassicalBlaschke.from_divisor(X)
        model = CoinvariantModel.from_divisor_d1(X)
    else:
        if not X.multiplicity_free:
            raise Unsupported("for d >= 2 only multiplicity-free divisors have a canonical preimage")
        chain = build_blaschke(X)
        model = CoinvariantModel.kernel_span(X)
    proj = defect_projection(chain, N) if N is not None else None
    return PhiResult(chain, model, proj)


def kernel_identity_error(chain, X, samples: Sequence) -> float:
    """max |(1 - b(z) b(w)^*) k(z, w) - k_P(z, w)| over the sample pairs."""
    model = X if isinstance(X, CoinvariantModel) else (
        CoinvariantModel.from_divisor_d1(X) if X.d == 1 else CoinvariantModel.kernel_span(X)
    )
    if scaled_condition(model.gram) > 1e14:
        raise DegeneracyError("model Gram matrix is singular", {"gram_singular": True})
    worst = 0.0
    for z, w in samples:
        lhs = (1 - np.dot(chain(z), np.conj(chain(w)))) * kernel_eval(z, w)
        worst = max(worst, abs(lhs - model.reproducing_kernel(z, w)))
    return float(worst)


def round_trip(X: Divisor, rng: np.random.Generator | None = None, n_samples: int = 50, seed: int = DEFAULT_SEED) -> dict:
    """d_o(psi(phi(X)), X) together with the kernel identity error on random pairs."""
    rng = rng if rng is not None else np.random.default_rng(seed)
    res = phi(X)
    back = psi(res.model, seed=seed)
    samples = [(random_ball_point(X.d, rng, 0.9), random_ball_point(X.d, rng, 0.9)) for _ in range(n_samples)]
    samples += [(p, p) for p in X.points]
    return {
        "d_o_error": optimal_matching_distance(back, X),
        "kernel_identity_error": kernel_identity_error(res.chain, res.model, samples),
    }


def aut_act(m: CoinvariantModel, phi_: BallAutomorphism) -> CoinvariantModel:
    """Move a kernel-span model along an automorphism: k_lam goes to k_{phi(lam)}."""
    if not m.multiplicity_free:
        raise Unsupported("the automorphism action is only implemented for kernel spans")
    if phi_.d != m.d:
        raise DimensionMismatch("automorphism and model differ in dimension")
    return CoinvariantModel.kernel_span([phi_(g.lam) for g in m.groups])


def same_span(m1: CoinvariantModel, m2: CoinvariantModel, rtol: float = 1e-10) -> bool:
    """Whether two models span the same subspace (rank of the joint Gram)."""
    if m1.d != m2.d or m1.dim != m2.dim:
        return False
    G = _gram(m1.flat() + m2.flat())
    ev = np.linalg.eigvalsh(G)
    return int(np.sum(ev > rtol * ev[-1])) == m1.dim


# ---------------------------------------------------------------------------
# The d = 1 norm-convergence example: H_n = span{1, k_{1/n}} tends to span{1, z}


def example_distance_sq(n: int) -> float:
    """||f_n - z||^2 with f_n = sqrt(n^2 - 1)(k_{1/n} - 1), from exact kernel pairings."""
    s = math.sqrt(n * n - 1)
    f = [((1.0 / n,), (0,), s), ((0.0,), (0,), -s)]
    u = f + [((0.0,), (1,), -1.0)]
    return formal_inner(u, u).real


def example_distance_formula(n: int) -> float:
    return 2.0 * (1.0 - math.sqrt(n * n - 1) / n)


def example_projection_gap(n: int, N: int = 60) -> float:
    """||P_n - P|| on degree <= N, P_n onto span{1, k_{1/n}}, P onto span{1, z}."""
    one = TruncVec.monomial((0,), N)
    k, _ = kernel_coefficients([1.0 / n], (0,), N)
    Pn = projection_onto([one, k])
    P = projection_onto([one, TruncVec.monomial((1,), N)])
    return float(np.linalg.norm(Pn - P, 2))


def non_invertibility_witness() -> dict:
    """span{1, z_1} and span{1, z_2} in d = 2: same Psi, different subspaces."""
    m1 = CoinvariantModel.jet([0, 0], 2, direction=0)
    m2 = CoinvariantModel.jet([0, 0], 2, direction=1)
    p1, p2 = psi(m1), psi(m2)
    return {
        "psi_1": p1,
        "psi_2": p2,
        "same_divisor": optimal_matching_distance(p1, p2) <= 1e-12,
        "same_span": same_span(m1, m2),
    }

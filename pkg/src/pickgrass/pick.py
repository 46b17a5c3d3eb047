"""Pick matrices, embedding dimension, strata and regular points."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .ball import Divisor, as_point, pseudo_distance
from .errors import DimensionMismatch, ValidationError
from .fock import kernel_eval

FEASIBLE_TOL = 1e-10
MARGINAL_TOL = 1e-8
RANK_RTOL = 1e-10
COINCIDE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class PickProblem:
    """Interpolation nodes and targets; targets are all scalars or all r x r matrices."""

    points: tuple
    targets: tuple

    @classmethod
    def create(cls, points, targets) -> "PickProblem":
        pts = [as_point(p) for p in points]
        if len(pts) != len(targets):
            raise ValidationError("points and targets differ in length")
        if not pts:
            raise ValidationError("empty interpolation problem")
        d = pts[0].size
        if any(p.size != d for p in pts):
            raise DimensionMismatch("points of mixed dimension")
        tg = [np.asarray(t, dtype=complex) for t in targets]
        shapes = {t.shape for t in tg}
        if len(shapes) != 1:
            raise ValidationError("targets mix scalars and matrices, or matrix sizes differ")
        shape = shapes.pop()
        if shape not in ((),) and (len(shape) != 2 or shape[0] != shape[1]):
            raise ValidationError("matrix targets must be square")
        # merge repeated nodes with equal targets, reject conflicting ones
        keep_p, keep_t = [], []
        for p, t in zip(pts, tg):
            dup = next((i for i, q in enumerate(keep_p) if np.linalg.norm(p - q) <= COINCIDE_TOL), None)
            if dup is None:
                keep_p.append(p)
                keep_t.append(t)
            elif np.max(np.abs(keep_t[dup] - t)) > COINCIDE_TOL:
                raise ValidationError("coincident points with conflicting targets")
        return cls(tuple(keep_p), tuple(keep_t))

    @property
    def matrix_mode(self) -> bool:
        return self.targets[0].ndim == 2

    @property
    def n(self) -> int:
        return len(self.points)


def pick_matrix(p: PickProblem) -> dict:
    """((I - W_i W_j^*) k(lam_i, lam_j)) with its smallest eigenvalue and a feasibility verdict."""
    n = p.n
    if p.matrix_mode:
        r = p.targets[0].shape[0]
        P = np.zeros((n * r, n * r), dtype=complex)
        for i, j in itertools.product(range(n), repeat=2):
            Wi, Wj = p.targets[i], p.targets[j]
            P[i * r : (i + 1) * r, j * r : (j + 1) * r] = (np.eye(r) - Wi @ Wj.conj().T) * kernel_eval(
                p.points[i], p.points[j]
            )
    else:
        w = np.array([complex(t) for t in p.targets])
        K = np.array([[kernel_eval(a, b) for b in p.points] for a in p.points])
        P = (1 - np.outer(w, w.conj())) * K
    P = 0.5 * (P + P.conj().T)
    lo = float(np.linalg.eigvalsh(P)[0])
    return {
        "matrix": P,
        "min_eigenvalue": lo,
        "feasible": lo >= -FEASIBLE_TOL,
        "marginal": abs(lo) <= MARGINAL_TOL,
    }


def _numerical_rank(M: np.ndarray) -> int:
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > s[0] * max(M.shape) * RANK_RTOL))


def _distinct(points: list[np.ndarray]) -> None:
    for i, j in itertools.combinations(range(len(points)), 2):
        if np.linalg.norm(points[i] - points[j]) <= COINCIDE_TOL:
            raise ValidationError(f"coincident points at positions {i} and {j}")


def normalized_defect(points) -> np.ndarray:
    """g(x_i, x_j) = 1 - 1/k~(x_i, x_j), k~ the kernel normalized at x_1.

    Equals the Gram matrix of phi_{x_1}(x_i), the configuration moved so
    that x_1 sits at the origin.
    """
    pts = [as_point(p) for p in points]
    _distinct(pts)
    x1 = pts[0]
    k11 = kernel_eval(x1, x1)
    n = len(pts)
    g = np.empty((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            kt = kernel_eval(pts[i], pts[j]) * k11 / (kernel_eval(pts[i], x1) * kernel_eval(x1, pts[j]))
            g[i, j] = 1.0 - 1.0 / kt
    return g


def embedding_dimension(points) -> int:
    """Rank of the normalized kernel defect (0 for a single point)."""
    if isinstance(points, Divisor):
        points = points.points
    return _numerical_rank(normalized_defect(points))


def stratum(X) -> int:
    """Least m with aff.span(X) of dimension <= m: rank of the difference matrix C_X."""
    pts = X.points if isinstance(X, Divisor) else [as_point(p) for p in X]
    if isinstance(X, Divisor) and not X.multiplicity_free:
        raise ValidationError("stratum is defined on multiplicity-free configurations")
    if len(pts) < 2:
        raise ValidationError("stratum needs at least two points")
    _distinct(pts)
    C = np.column_stack([p - pts[-1] for p in pts[:-1]])
    return _numerical_rank(C)


def pairwise_distances(X) -> np.ndarray:
    pts = X.points if isinstance(X, Divisor) else [as_point(p) for p in X]
    return np.array([pseudo_distance(a, b) for a, b in itertools.combinations(pts, 2)])


def is_regular(X, tol: float = 1e-10) -> bool:
    """All pairwise pseudohyperbolic distances differ by more than tol."""
    dist = np.sort(pairwise_distances(X))
    return bool(np.all(np.diff(dist) > tol))

"""Joint spectra of commuting matrix tuples, counted with multiplicity.

sigma_J(A) assigns to every joint eigenvalue lam the dimension of its root
subspace, the common kernel of all (A - lam)^alpha with |alpha| = n.  The
computation triangularizes a random linear combination B = sum c_j A_j,
groups the eigenvalues of B, and reads each joint point off as a normalized
trace over the matching invariant subspace of B.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lapack, schur
from scipy.sparse.csgraph import connected_components

from .ball import Divisor, _bottleneck
from .errors import DegeneracyError, DimensionMismatch, ValidationError

DEFAULT_SEED = 0xDA5EED
COMMUTATION_TOL = 1e-10
RANK_RTOL = 1e-12
MAX_RETRIES = 8
# safety factor on the first-order eigenvalue error bound
CERT_FACTOR = 100.0


@dataclass(frozen=True)
class CommutingTuple:
    """d commuting n x n complex matrices, stored as an array of shape (d, n, n)."""

    matrices: np.ndarray
    commutation_defect: float = field(init=False)

    def __post_init__(self):
        A = np.asarray(self.matrices, dtype=complex)
        if A.ndim == 2:
            A = A[None]
        if A.ndim != 3 or A.shape[1] != A.shape[2] or A.shape[0] < 1:
            raise DimensionMismatch("a tuple needs d >= 1 square matrices of equal size")
        if not np.all(np.isfinite(A)):
            raise ValidationError("non-finite matrix entries")
        A.setflags(write=False)
        object.__setattr__(self, "matrices", A)
        defect = 0.0
        for i, j in itertools.combinations(range(A.shape[0]), 2):
            defect = max(defect, np.linalg.norm(A[i] @ A[j] - A[j] @ A[i], 2))
        object.__setattr__(self, "commutation_defect", float(defect))

    @property
    def d(self) -> int:
        return self.matrices.shape[0]

    @property
    def n(self) -> int:
        return self.matrices.shape[1]

    def __len__(self) -> int:
        return self.d

    def __getitem__(self, j: int) -> np.ndarray:
        return self.matrices[j]

    def col_norm(self) -> float:
        """||A||_col = ||sum_j A_j^* A_j||^{1/2}."""
        return col_norm(self.matrices)

    def row_norm(self) -> float:
        """||A||_row = ||sum_j A_j A_j^*||^{1/2}."""
        return col_norm(np.conj(np.transpose(self.matrices, (0, 2, 1))))

    def require_commuting(self, tol: float = COMMUTATION_TOL) -> None:
        if self.commutation_defect > tol:
            raise ValidationError(f"commutation defect {self.commutation_defect:.3e} exceeds {tol:.0e}")

    def similar(self, S: np.ndarray) -> "CommutingTuple":
        """The tuple S^{-1} A S."""
        Si = np.linalg.inv(S)
        return CommutingTuple(np.array([Si @ a @ S for a in self.matrices]))


def col_norm(mats: np.ndarray) -> float:
    stacked = np.concatenate(list(np.asarray(mats)), axis=0)
    return float(np.linalg.norm(stacked, 2))


def _as_tuple(A) -> CommutingTuple:
    return A if isinstance(A, CommutingTuple) else CommutingTuple(A)


def _null_space(M: np.ndarray, rtol: float, scale: float = 0.0) -> np.ndarray:
    """Null space by SVD; singular values below max(s_max, scale) * n * rtol count as zero."""
    n = M.shape[1]
    if M.size == 0:
        return np.eye(n, dtype=complex)
    _, s, Vh = np.linalg.svd(M)
    ref = max(s[0] if s.size else 0.0, scale)
    if ref == 0.0:
        return np.eye(n, dtype=complex)
    rank = int(np.sum(s > ref * n * rtol))
    return Vh[rank:].conj().T


def root_subspace(A, lam, rtol: float = RANK_RTOL) -> np.ndarray:
    """Orthonormal basis (columns) of the common kernel of (A - lam)^alpha, |alpha| = n."""
    A = _as_tuple(A)
    A.require_commuting()
    lam = np.asarray(lam, dtype=complex).ravel()
    if lam.size != A.d:
        raise DimensionMismatch(f"point has {lam.size} coordinates, tuple has {A.d}")
    n = A.n
    shifted = [A[j] - lam[j] * np.eye(n) for j in range(A.d)]
    # powers[j][k] = (A_j - lam_j)^k
    powers = [[np.eye(n, dtype=complex)] for _ in range(A.d)]
    for j in range(A.d):
        for _ in range(n):
            powers[j].append(powers[j][-1] @ shifted[j])
    blocks = []
    for combo in itertools.combinations_with_replacement(range(A.d), n):
        M = np.eye(n, dtype=complex)
        for j in range(A.d):
            M = M @ powers[j][combo.count(j)]
        blocks.append(M)
    # a priori size of the powers, so that an exactly nilpotent shift is not
    # judged against its own roundoff
    scale = (A.col_norm() + float(np.linalg.norm(lam))) ** n
    return _null_space(np.vstack(blocks), rtol, scale)


def _cluster(vals: np.ndarray, radius: float) -> list[np.ndarray]:
    """Single-linkage groups of complex numbers at the given radius."""
    adj = np.abs(vals[:, None] - vals[None, :]) <= radius
    k, labels = connected_components(adj.astype(np.int8), directed=False)
    return [np.nonzero(labels == i)[0] for i in range(k)]


def _cluster_point(T: np.ndarray, Z: np.ndarray, mats: np.ndarray, members: np.ndarray):
    """Mean joint eigenvalue over the invariant subspace for the selected eigenvalues of T.

    Also returns the restricted tuple and LAPACK's reciprocal condition
    number of the cluster (tiny when a Jordan block has been split).
    """
    select = np.zeros(T.shape[0], dtype=np.int32)
    select[members] = 1
    _, Q, _, m, rcond, _, info = lapack.ztrsen(select, T, Z, job="E", lwork=max(1, T.shape[0] ** 2))
    if info != 0:
        raise DegeneracyError("Schur reordering failed", {"ztrsen_info": int(info)})
    Qk = Q[:, :m]
    restricted = np.array([Qk.conj().T @ a @ Qk for a in mats])
    point = np.array([np.trace(r) / m for r in restricted])
    return point, restricted, float(rcond)


def _single_point(restricted: np.ndarray, point: np.ndarray, tol: float) -> bool:
    """Every restricted A_j has all its eigenvalues within tol of the cluster's coordinate."""
    for r, p in zip(restricted, point):
        if np.max(np.abs(np.linalg.eigvals(r) - p)) > tol:
            return False
    return True


def _merge_heights(vals: np.ndarray) -> np.ndarray:
    """Single-linkage merge heights (minimum spanning tree edge lengths)."""
    n = vals.size
    if n < 2:
        return np.zeros(0)
    D = np.abs(vals[:, None] - vals[None, :])
    # Prim's algorithm on the complete graph
    inside = np.zeros(n, dtype=bool)
    inside[0] = True
    best = D[0].copy()
    out = []
    for _ in range(n - 1):
        best[inside] = np.inf
        k = int(np.argmin(best))
        out.append(best[k])
        inside[k] = True
        best = np.minimum(best, D[k])
    return np.sort(np.array(out))


def _try_combination(A: CommutingTuple, c: np.ndarray, base: float):
    """Finest certified clustering of the eigenvalues of B = sum c_j A_j, or None.

    A cut is certified when, for every cluster, the first-order error bound
    u ||B|| / s of its mean eigenvalue (s from the Schur reordering) is well
    below the gap to the other clusters, and, for d >= 2, no coordinate
    matrix spreads the cluster apart.  Splintered Jordan blocks have tiny s
    and fail the first test; colliding distinct joint points fail the second.
    """
    B = np.tensordot(c, A.matrices, axes=1)
    T, Z = schur(B, output="complex")
    ev = np.diag(T)
    unit = np.finfo(float).eps * max(np.linalg.norm(B), 1e-300)
    heights = _merge_heights(ev)
    radii = [base] + [float(h) for h in heights if h > base]
    last = None
    for r in radii:
        groups = _cluster(ev, r)
        if last is not None and len(groups) == last:
            continue
        last = len(groups)
        pts, mults, ok = [], [], True
        for g in groups:
            others = np.setdiff1d(np.arange(ev.size), g)
            gap = np.min(np.abs(ev[g][:, None] - ev[others][None, :])) if others.size else np.inf
            p, restricted, rcond = _cluster_point(T, Z, A.matrices, g)
            err = CERT_FACTOR * unit / max(rcond, 1e-300)
            diam = np.max(np.abs(ev[g] - ev[g].mean())) if g.size > 1 else 0.0
            if err >= 0.1 * gap or (g.size > 1 and others.size == 0 and diam > _lone_cap(A, ev)):
                ok = False
                break
            if A.d > 1 and not _single_point(restricted, p, 10 * max(diam, err, base)):
                ok = False
                break
            pts.append(p)
            mults.append(g.size)
        if ok:
            return pts, mults
    return None


def _lone_cap(A: CommutingTuple, ev: np.ndarray) -> float:
    """Largest spread tolerated when all eigenvalues form a single cluster."""
    return 1e-2 * max(A.col_norm(), 1e-8)


def joint_spectrum_points(
    A, seed: int = DEFAULT_SEED, cluster_radius: float | None = None, max_retries: int = MAX_RETRIES
) -> tuple[list[np.ndarray], list[int]]:
    """Joint eigenvalues and root-subspace dimensions, as parallel lists."""
    A = _as_tuple(A)
    A.require_commuting()
    base = cluster_radius if cluster_radius is not None else max(1e-8, 1e-6 * A.col_norm())
    rng = np.random.default_rng(seed)
    for _ in range(max_retries + 1):
        c = rng.normal(size=A.d) + 1j * rng.normal(size=A.d)
        c /= np.linalg.norm(c)
        found = _try_combination(A, c, base)
        if found is not None:
            return found
    raise DegeneracyError(
        "could not certify a clustering of the joint spectrum",
        {"clustering_ambiguity": True, "retries": max_retries},
    )


def joint_spectrum(A, seed: int = DEFAULT_SEED, cluster_radius: float | None = None) -> Divisor:
    """sigma_J(A) as a divisor; multiplicities sum to n."""
    pts, mults = joint_spectrum_points(A, seed, cluster_radius)
    X = Divisor.from_points(pts, mults, check_ball=False)
    if not X.inside_ball():
        warnings.warn("joint spectrum leaves the open unit ball", RuntimeWarning, stacklevel=2)
    return X


def _hausdorff(P: list[np.ndarray], Q: list[np.ndarray]) -> float:
    D = np.array([[np.linalg.norm(p - q) for q in Q] for p in P])
    return float(max(D.min(axis=1).max(), D.min(axis=0).max()))


def elsner_bound(A, B) -> float:
    """n^{1/n} (2M)^{1 - 1/n} ||A - B||_col^{1/n}, M the larger column norm."""
    A, B = _as_tuple(A), _as_tuple(B)
    n = A.n
    M = max(A.col_norm(), B.col_norm())
    diff = col_norm(A.matrices - B.matrices)
    return float(n ** (1.0 / n) * (2 * M) ** (1.0 - 1.0 / n) * diff ** (1.0 / n))


def spectral_perturbation_check(A, B, seed: int = DEFAULT_SEED) -> dict:
    """Compare sigma(A), sigma(B) against the column-norm perturbation bound."""
    A, B = _as_tuple(A), _as_tuple(B)
    if A.matrices.shape != B.matrices.shape:
        raise DimensionMismatch(f"tuple shapes differ: {A.matrices.shape} vs {B.matrices.shape}")
    pa, ma = joint_spectrum_points(A, seed)
    pb, mb = joint_spectrum_points(B, seed)
    hausdorff = _hausdorff(pa, pb)
    xa = [p for p, m in zip(pa, ma) for _ in range(m)]
    xb = [p for p, m in zip(pb, mb) for _ in range(m)]
    cost = np.array([[np.linalg.norm(x - y) for y in xb] for x in xa])
    matching = _bottleneck(cost)
    bound = elsner_bound(A, B)
    return {
        "hausdorff": hausdorff,
        "matching": matching,
        "elsner_bound": bound,
        "holds": bool(hausdorff <= bound + 1e-10),
    }


def row_to_col_bound(A) -> float:
    """||A||_col <= sqrt(d) ||A||_row, the comparison used for row-norm versions."""
    A = _as_tuple(A)
    return math.sqrt(A.d) * A.row_norm()

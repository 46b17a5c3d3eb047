"""Geometry of the open unit ball in C^d.

Points are plain complex numpy vectors; :class:`Divisor` is the finite formal
sum of points with positive multiplicities (an element of the symmetrized
polyball).  Distances between divisors are bottleneck matchings over the
symmetric group.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .errors import DegreeMismatch, DimensionMismatch, OutsideBall, ValidationError

EQ_TOL = 1e-12
MERGE_TOL = 1e-12
BRUTE_FORCE_MAX_N = 9


def as_point(z, d: int | None = None, check_ball: bool = True) -> np.ndarray:
    """Coerce ``z`` to a complex vector strictly inside the ball."""
    p = np.atleast_1d(np.asarray(z, dtype=complex)).ravel()
    if p.size == 0:
        raise ValidationError("a ball point needs d >= 1 coordinates")
    if d is not None and p.size != d:
        raise DimensionMismatch(f"expected a point in C^{d}, got C^{p.size}")
    if not np.all(np.isfinite(p)):
        raise ValidationError("non-finite coordinates")
    if check_ball and np.vdot(p, p).real >= 1.0:
        raise OutsideBall(f"point {p} is not inside the open unit ball")
    return p


def _same_dim(z: np.ndarray, w: np.ndarray) -> None:
    if z.shape != w.shape:
        raise DimensionMismatch(f"dimension mismatch: {z.size} vs {w.size}")


def inner(z: np.ndarray, w: np.ndarray) -> complex:
    """<z, w> = sum z_i conj(w_i) (linear in the first slot)."""
    return complex(np.dot(z, np.conj(w)))


def mobius_involution(lam, z) -> np.ndarray:
    """The involution phi_lam of the ball exchanging lam and 0.

    For lam = 0 this returns -z, which keeps phi_lam(lam) = 0, the involution
    property, and continuity in lam.
    """
    lam = as_point(lam)
    z = as_point(z)
    _same_dim(lam, z)
    r2 = np.vdot(lam, lam).real
    if r2 == 0.0:
        return -z
    zl = inner(z, lam)
    pz = (zl / r2) * lam
    s = np.sqrt(1.0 - r2)
    return (lam - pz - s * (z - pz)) / (1.0 - zl)


def pseudo_distance(z, w) -> float:
    """Pseudohyperbolic distance ||phi_z(w)||, via the closed form

    1 - d^2 = (1 - |z|^2)(1 - |w|^2) / |1 - <z, w>|^2

    rewritten as d^2 = (|u|^2 - |z|^2|u|^2 + |<u, z>|^2) / |1 - <z, w>|^2 with
    u = w - z.  Every term is O(|u|^2), so nearby points lose no accuracy.
    """
    z = as_point(z)
    w = as_point(w)
    _same_dim(z, w)
    u = w - z
    uu = np.vdot(u, u).real
    num = uu - np.vdot(z, z).real * uu + abs(inner(u, z)) ** 2
    den = abs(1.0 - inner(z, w)) ** 2
    return float(np.sqrt(max(num, 0.0) / den))


# ---------------------------------------------------------------------------
# Divisors


def _canon_key(p: np.ndarray) -> tuple:
    return tuple(itertools.chain.from_iterable((float(c.real), float(c.imag)) for c in p))


@dataclass(frozen=True)
class Divisor:
    """Formal sum of distinct ball points with positive integer multiplicities.

    Always canonical: entries sorted lexicographically on the (Re, Im)
    coordinate tuple, and points closer than ``MERGE_TOL`` merged.
    Use :meth:`from_points` rather than the raw constructor.
    """

    d: int
    entries: tuple  # ((coords tuple of complex, mult int), ...)

    @classmethod
    def from_points(
        cls, points: Iterable, mults: Iterable[int] | None = None, d: int | None = None, check_ball: bool = True
    ) -> "Divisor":
        """Canonical divisor from points and multiplicities.

        ``check_ball=False`` admits points on or outside the sphere; joint
        spectra of arbitrary tuples need this.
        """
        pts = [as_point(p, d, check_ball) for p in points]
        if not pts:
            raise ValidationError("empty divisor")
        d = pts[0].size
        for p in pts:
            if p.size != d:
                raise DimensionMismatch("points of mixed dimension")
        ms = [1] * len(pts) if mults is None else [int(m) for m in mults]
        if len(ms) != len(pts):
            raise ValidationError("points and multiplicities differ in length")
        if any(m < 1 for m in ms):
            raise ValidationError("multiplicities must be positive")
        merged: list[list] = []
        for p, m in sorted(zip(pts, ms), key=lambda t: _canon_key(t[0])):
            for e in merged:
                if np.linalg.norm(e[0] - p) < MERGE_TOL:
                    e[1] += m
                    break
            else:
                merged.append([p, m])
        merged.sort(key=lambda t: _canon_key(t[0]))
        return cls(d, tuple((tuple(complex(c) for c in p), m) for p, m in merged))

    def inside_ball(self) -> bool:
        return all(np.vdot(p, p).real < 1.0 for p in self.points)

    @property
    def degree(self) -> int:
        return sum(m for _, m in self.entries)

    @property
    def points(self) -> list[np.ndarray]:
        return [np.array(p, dtype=complex) for p, _ in self.entries]

    @property
    def multiplicities(self) -> list[int]:
        return [m for _, m in self.entries]

    @property
    def multiplicity_free(self) -> bool:
        return all(m == 1 for _, m in self.entries)

    def expanded(self) -> np.ndarray:
        """Points repeated by multiplicity, shape (degree, d)."""
        rows = [np.array(p, dtype=complex) for p, m in self.entries for _ in range(m)]
        return np.array(rows)

    def __add__(self, other: "Divisor") -> "Divisor":
        if self.d != other.d:
            raise DimensionMismatch("cannot add divisors of different dimension")
        return Divisor.from_points(
            self.points + other.points, self.multiplicities + other.multiplicities, check_ball=False
        )

    def __repr__(self) -> str:
        terms = []
        for p, m in self.entries:
            coords = ", ".join(f"{c.real:.6g}{c.imag:+.6g}j" if c.imag else f"{c.real:.6g}" for c in p)
            terms.append(f"{m}[({coords})]" if m > 1 else f"[({coords})]")
        return "Divisor(" + " + ".join(terms) + ")"


def _check_pair(X: Divisor, Y: Divisor) -> None:
    if X.d != Y.d:
        raise DimensionMismatch(f"dimension mismatch: {X.d} vs {Y.d}")
    if X.degree != Y.degree:
        raise DegreeMismatch(f"degree mismatch: {X.degree} vs {Y.degree}")


@lru_cache(maxsize=None)
def _perms(n: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(n))), dtype=np.int8).reshape(-1, n)


def bottleneck_bruteforce(cost: np.ndarray) -> float:
    """min over permutations s of max_j cost[j, s(j)], by exhaustive enumeration."""
    n = cost.shape[0]
    if n == 0:
        return 0.0
    perms = _perms(n)
    vals = cost[np.arange(n), perms]  # (n!, n)
    return float(vals.max(axis=1).min())


def bottleneck_matching(cost: np.ndarray) -> float:
    """Bottleneck assignment by binary search over the sorted cost values.

    Feasibility of a threshold is a perfect matching in the bipartite graph
    of admissible pairs.
    """
    n = cost.shape[0]
    if n == 0:
        return 0.0
    levels = np.unique(cost)
    lo, hi = 0, levels.size - 1
    while lo < hi:
        mid = (lo + hi) // 2
        graph = csr_matrix((cost <= levels[mid]).astype(np.int8))
        match = maximum_bipartite_matching(graph, perm_type="column")
        if np.all(match >= 0):
            hi = mid
        else:
            lo = mid + 1
    return float(levels[lo])


def _bottleneck(cost: np.ndarray) -> float:
    if cost.shape[0] <= BRUTE_FORCE_MAX_N:
        return bottleneck_bruteforce(cost)
    return bottleneck_matching(cost)


def _pairwise(X: Divisor, Y: Divisor, metric) -> np.ndarray:
    xs, ys = X.expanded(), Y.expanded()
    return np.array([[metric(x, y) for y in ys] for x in xs])


def symmetric_distance(X: Divisor, Y: Divisor) -> float:
    """d_s: bottleneck matching of pseudohyperbolic distances."""
    _check_pair(X, Y)
    return _bottleneck(_pairwise(X, Y, pseudo_distance))


def optimal_matching_distance(X: Divisor, Y: Divisor) -> float:
    """d_o: bottleneck matching of Euclidean distances in C^d."""
    _check_pair(X, Y)
    return _bottleneck(_pairwise(X, Y, lambda x, y: float(np.linalg.norm(x - y))))


# ---------------------------------------------------------------------------
# Automorphisms


@dataclass(frozen=True)
class BallAutomorphism:
    """z -> unitary @ phi_base(z)."""

    unitary: np.ndarray
    base: np.ndarray

    def __post_init__(self):
        U = np.asarray(self.unitary, dtype=complex)
        b = as_point(self.base)
        if U.shape != (b.size, b.size):
            raise DimensionMismatch("unitary and base point disagree in dimension")
        if np.linalg.norm(U.conj().T @ U - np.eye(b.size)) > 1e-12 * max(1, b.size):
            raise ValidationError("matrix is not unitary to 1e-12")
        object.__setattr__(self, "unitary", U)
        object.__setattr__(self, "base", b)

    @property
    def d(self) -> int:
        return self.base.size

    @classmethod
    def identity(cls, d: int) -> "BallAutomorphism":
        # phi_0 = -id, so the unitary -I undoes it
        return cls(-np.eye(d, dtype=complex), np.zeros(d, dtype=complex))

    @classmethod
    def involution(cls, base) -> "BallAutomorphism":
        b = as_point(base)
        return cls(np.eye(b.size, dtype=complex), b)

    @classmethod
    def random(cls, d: int, rng: np.random.Generator, radius: float = 0.7) -> "BallAutomorphism":
        Z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        Q, R = np.linalg.qr(Z)
        Q = Q * (np.diag(R) / np.abs(np.diag(R)))
        return cls(Q, random_ball_point(d, rng, radius))

    def __call__(self, z) -> np.ndarray:
        return self.unitary @ mobius_involution(self.base, z)


def apply_automorphism(phi: BallAutomorphism, X: Divisor) -> Divisor:
    if phi.d != X.d:
        raise DimensionMismatch("automorphism and divisor differ in dimension")
    return Divisor.from_points([phi(p) for p in X.points], X.multiplicities)


def random_ball_point(d: int, rng: np.random.Generator, radius: float = 1.0) -> np.ndarray:
    """Uniform sample from the closed ball of the given radius in C^d."""
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    v /= np.linalg.norm(v)
    return v * radius * rng.uniform() ** (1.0 / (2 * d))


def random_configuration(
    d: int, n: int, rng: np.random.Generator, radius: float = 0.8, min_sep: float = 0.0
) -> list[np.ndarray]:
    """n points in radius*closure(B_d), pairwise Euclidean-separated by ``min_sep``."""
    pts: list[np.ndarray] = []
    while len(pts) < n:
        p = random_ball_point(d, rng, radius)
        if all(np.linalg.norm(p - q) >= min_sep for q in pts):
            pts.append(p)
    return pts


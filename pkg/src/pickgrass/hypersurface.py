"""Quotients H_p = H^2_d minus p H^2_d for homogeneous p.

Truncated models of the compressed shifts, Cowen-Douglas fibers, the
Gleason problem on a fiber, the metric and curvature of the two-line
example p = (z_1 - lam z_2)(z_1 - mu z_2), and a numerical commutant
test for irreducibility of S_2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import null_space, subspace_angles

from .errors import DegreeMismatch, DimensionMismatch, OutsideBall, ValidationError
from .fock import TruncVec, basis, kernel_coefficients, kernel_eval, multiplication_matrix, shift_matrices
from .spectra import DEFAULT_SEED

FIBER_RTOL = 1e-8
ROOT_MERGE_TOL = 1e-6
BALL_MARGIN = 0.99
COMMUTANT_RTOL = 1e-9
STEP_RANGE = (1e-5, 1e-2)


# ---------------------------------------------------------------------------
# Polynomials and the truncated quotient


@dataclass(frozen=True)
class HomogPoly:
    """Homogeneous polynomial with a distinguished coordinate (0-based)."""

    d: int
    degree: int
    terms: tuple  # ((alpha, coeff), ...)
    distinguished: int

    @classmethod
    def create(cls, terms: dict, d: int | None = None, distinguished: int | None = None) -> "HomogPoly":
        items = [(tuple(int(a) for a in alpha), complex(c)) for alpha, c in terms.items() if c != 0]
        if not items:
            raise ValidationError("zero polynomial")
        d = len(items[0][0]) if d is None else d
        if any(len(a) != d for a, _ in items):
            raise DimensionMismatch("multi-index length differs from d")
        degs = {sum(a) for a, _ in items}
        if len(degs) != 1:
            raise DegreeMismatch(f"polynomial is not homogeneous (degrees {sorted(degs)})")
        n = degs.pop()
        if n < 1:
            raise ValidationError("constant polynomial")
        j = d - 1 if distinguished is None else int(distinguished)
        if not 0 <= j < d:
            raise ValidationError(f"distinguished index {j} outside 0..{d - 1}")
        p = cls(d, n, tuple(sorted(items)), j)
        if p.coefficient(p.axis_index(j)) == 0:
            raise ValidationError(f"p vanishes on the axis of coordinate {j}")
        return p

    @classmethod
    def two_lines(cls, lam: complex, mu: complex, distinguished: int = 0) -> "HomogPoly":
        """(z_1 - lam z_2)(z_1 - mu z_2)."""
        return cls.create({(2, 0): 1.0, (1, 1): -(lam + mu), (0, 2): lam * mu}, distinguished=distinguished)

    def axis_index(self, j: int) -> tuple:
        e = [0] * self.d
        e[j] = self.degree
        return tuple(e)

    def coefficient(self, alpha) -> complex:
        return dict(self.terms).get(tuple(alpha), 0j)

    def __call__(self, z) -> complex:
        z = np.asarray(z, dtype=complex)
        return complex(sum(c * np.prod(z ** np.array(a)) for a, c in self.terms))

    def as_vec(self, N: int) -> TruncVec:
        return TruncVec.from_terms(self.d, N, dict(self.terms))

    def slice_coefficients(self, t: Sequence[complex], completing: int) -> np.ndarray:
        """Coefficients (highest first) of x -> p(t with x inserted at `completing`)."""
        t = np.asarray(t, dtype=complex)
        coef = np.zeros(self.degree + 1, dtype=complex)
        others = [i for i in range(self.d) if i != completing]
        for alpha, c in self.terms:
            val = c * np.prod([t[k] ** alpha[i] for k, i in enumerate(others)])
            coef[self.degree - alpha[completing]] += val
        return coef

    def slice_roots(self, t: Sequence[complex], completing: int, merge_tol: float = ROOT_MERGE_TOL):
        """Roots of the one-variable slice with multiplicities, via companion eigenvalues."""
        coef = self.slice_coefficients(t, completing)
        if coef[0] == 0:
            raise ValidationError(f"p vanishes on the axis of coordinate {completing}")
        roots = np.roots(coef)
        scale = max(1.0, float(np.max(np.abs(roots)))) if roots.size else 1.0
        groups: list[list[complex]] = []
        for r in roots:
            for g in groups:
                if abs(np.mean(g) - r) <= merge_tol * scale:
                    g.append(r)
                    break
            else:
                groups.append([r])
        return [complex(np.mean(g)) for g in groups], [len(g) for g in groups]

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "degree": self.degree,
            "terms": [{"alpha": list(a), "coeff": c} for a, c in self.terms],
            "distinguished": self.distinguished,
        }


def slice_bound(p: HomogPoly, completing: int | None = None, n_samples: int = 2000, seed: int = DEFAULT_SEED) -> float:
    """Sampled max of |w_c| over unit-norm zeros w of p (c the completing coordinate).

    Every zero off the axis is a multiple of (u, root) with u a unit base
    vector, so sampling u on the base sphere covers the whole cone.
    """
    c = p.distinguished if completing is None else completing
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(n_samples):
        u = rng.normal(size=p.d - 1) + 1j * rng.normal(size=p.d - 1)
        u /= np.linalg.norm(u)
        for r in np.roots(p.slice_coefficients(u, c)):
            best = max(best, abs(r) / np.sqrt(1 + abs(r) ** 2))
    return float(best)


@dataclass(frozen=True, eq=False)
class QuotientModel:
    """H_p truncated to degree <= N with the compressed shifts S_j = B* M_{z_j} B."""

    p: HomogPoly
    N: int
    basis: np.ndarray  # isometry, columns in orthonormal monomial coordinates
    shifts: tuple
    col_degrees: np.ndarray = field(repr=False)

    @property
    def d(self) -> int:
        return self.p.d

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    def graded_dims(self) -> list[int]:
        return [int(np.sum(self.col_degrees == m)) for m in range(self.N + 1)]

    def defect(self) -> np.ndarray:
        """I - sum S_j S_j^* in basis coordinates."""
        out = np.eye(self.dim, dtype=complex)
        for S in self.shifts:
            out -= S @ S.conj().T
        return out

    def coords(self, f) -> np.ndarray:
        """Quotient coordinates of f: a TruncVec or an ambient orthonormal-coordinate vector."""
        if isinstance(f, TruncVec):
            if f.d != self.d:
                raise DimensionMismatch("vector and model differ in dimension")
            f = f.truncate(self.N).on()
        f = np.asarray(f, dtype=complex)
        if f.shape == (self.dim,):
            return f
        if f.shape != (self.basis.shape[0],):
            raise DimensionMismatch("vector does not match the model")
        return self.basis.conj().T @ f

    def ambient(self, x: np.ndarray) -> TruncVec:
        return TruncVec.from_on(self.d, self.N, self.basis @ x)


def compress(p: HomogPoly, N: int) -> QuotientModel:
    """Orthonormal basis of the complement of p * (deg <= N - n) inside deg <= N, graded."""
    if N < p.degree:
        raise ValidationError(f"degree cap {N} below deg p = {p.degree}")
    ctx = basis(p.d, N)
    Mp = multiplication_matrix(p.as_vec(N), N)
    cols, degs = [], []
    for m in range(N + 1):
        rows = ctx.degree_slice(m)
        size = rows.stop - rows.start
        if m < p.degree:
            Q = np.eye(size, dtype=complex)
        else:
            block = Mp[rows, ctx.degree_slice(m - p.degree)]
            Q = null_space(block.conj().T)
        full = np.zeros((ctx.dim, Q.shape[1]), dtype=complex)
        full[rows] = Q
        cols.append(full)
        degs += [m] * Q.shape[1]
    B = np.hstack(cols)
    shifts = []
    for M in shift_matrices(p.d, N):
        S = B.conj().T @ M @ B
        S.setflags(write=False)
        shifts.append(S)
    B.setflags(write=False)
    degs = np.array(degs)
    degs.setflags(write=False)
    return QuotientModel(p, N, B, tuple(shifts), degs)


# ---------------------------------------------------------------------------
# Fibers and the Gleason problem


def _completing(q: QuotientModel, base: Sequence[int]) -> int:
    base = sorted(set(int(i) for i in base))
    if any(not 0 <= i < q.d for i in base):
        raise ValidationError(f"base indices must lie in 0..{q.d - 1}")
    rest = [i for i in range(q.d) if i not in base]
    if len(rest) != 1 or len(base) != q.d - 1:
        raise ValidationError("base set must omit exactly one coordinate")
    return rest[0]


def fiber_points(p: HomogPoly, base: Sequence[int], t: Sequence[complex], completing: int):
    """Points completing t by the slice roots, and their multiplicities."""
    t = np.asarray(t, dtype=complex).ravel()
    if t.size != len(base):
        raise DimensionMismatch("one base value per base coordinate")
    roots, mults = p.slice_roots(t, completing)
    pts = []
    for r in roots:
        w = np.zeros(p.d, dtype=complex)
        w[list(base)] = t
        w[completing] = r
        if np.linalg.norm(w) >= BALL_MARGIN:
            raise OutsideBall(f"fiber point with norm {np.linalg.norm(w):.4f} leaves {BALL_MARGIN} * ball")
        pts.append(w)
    return pts, mults


def fiber(q: QuotientModel, base: Sequence[int], t: Sequence[complex], rtol: float = FIBER_RTOL) -> dict:
    """Joint kernel of (S_i^* - conj t_i), numerically and from kernels at the fiber points."""
    base = sorted(int(i) for i in base)
    c = _completing(q, base)
    t = np.asarray(t, dtype=complex).ravel()
    pts, mults = fiber_points(q.p, base, t, c)

    stacked = np.vstack([q.shifts[i].conj().T - np.conj(ti) * np.eye(q.dim) for i, ti in zip(base, t)])
    _, s, Vh = np.linalg.svd(stacked)
    k = int(np.sum(s <= rtol * max(1.0, s[0])))
    numeric = q.basis @ Vh[q.dim - k :].conj().T

    exact = []
    for w, m in zip(pts, mults):
        for ell in range(m):
            alpha = [0] * q.d
            alpha[c] = ell
            exact.append(kernel_coefficients(w, alpha, q.N)[0].on())
    exact = np.column_stack(exact)
    if k == exact.shape[1] and k > 0:
        discrepancy = float(np.max(subspace_angles(numeric, exact)))
    else:
        discrepancy = float(np.pi / 2)

    ratios = [abs(w[c]) / np.linalg.norm(w) if np.linalg.norm(w) > 0 else 0.0 for w in pts]
    return {
        "numeric_basis": numeric,
        "exact_basis": exact,
        "dimension": k,
        "expected_dimension": int(sum(mults)),
        "discrepancy": discrepancy,
        "points": pts,
        "multiplicities": mults,
        "completing": c,
        "slice_ratio": float(max(ratios)),
        "singular_values": s[::-1][: k + 3],
    }


def gleason_decompose(q: QuotientModel, base: Sequence[int], t: Sequence[complex], f) -> dict:
    """Least-squares f = sum_i (S_i - t_i) h_i with each h_i of degree <= N - 1 in H_p.

    Letting h reach the top degree would make S_i - t_i look surjective,
    since the truncated S_i annihilates the top graded piece.
    """
    base = sorted(int(i) for i in base)
    _completing(q, base)
    t = np.asarray(t, dtype=complex).ravel()
    if t.size != len(base):
        raise DimensionMismatch("one base value per base coordinate")
    x = q.coords(f)
    low = np.nonzero(q.col_degrees <= q.N - 1)[0]
    A = np.hstack([(q.shifts[i] - ti * np.eye(q.dim))[:, low] for i, ti in zip(base, t)])
    if not np.any(x):
        sol = np.zeros(A.shape[1], dtype=complex)
    else:
        sol = np.linalg.lstsq(A, x, rcond=None)[0]
    residual = float(np.linalg.norm(A @ sol - x))
    hs = []
    for k in range(len(base)):
        y = np.zeros(q.dim, dtype=complex)
        y[low] = sol[k * low.size : (k + 1) * low.size]
        hs.append(q.ambient(y))
    return {"h": hs, "residual": residual}


def vanishing_element(q: QuotientModel, i: int, t_i: complex, g: TruncVec) -> np.ndarray:
    """Quotient coordinates of P_{H_p}[(z_i - t_i) g], which lies in the range of S_i - t_i."""
    if g.degree > q.N - 1:
        raise ValidationError("g must have degree <= N - 1")
    e = [0] * q.d
    e[i] = 1
    lin = TruncVec.from_terms(q.d, q.N, {tuple(e): 1.0, (0,) * q.d: -t_i})
    return q.coords(lin * g.truncate(q.N))


# ---------------------------------------------------------------------------
# The two-line example: metric, curvature, irreducibility


def _example_constants(lam: complex, mu: complex):
    lam, mu = complex(lam), complex(mu)
    if abs(lam - mu) == 0:
        raise ValidationError("lambda = mu: the frame degenerates")
    return lam, mu, 1 + abs(lam) ** 2, 1 + abs(mu) ** 2, 1 + lam * np.conj(mu)


def metric_closed(lam: complex, mu: complex) -> Callable[[complex], np.ndarray]:
    """Closed-form metric of the frame as a function of z."""
    lam, mu, a, b, c = _example_constants(lam, mu)
    ll, lm = abs(lam), abs(mu)

    def H(z: complex) -> np.ndarray:
        r = abs(z) ** 2
        return np.array(
            [
                [1 / (1 - a * r), lam * np.conj(lam - mu) * np.conj(z) / ((1 - a * r) * (1 - c * r))],
                [
                    np.conj(lam) * (lam - mu) * z / ((1 - a * r) * (1 - np.conj(c) * r)),
                    abs(lam - mu) ** 2
                    * (1 - (1 - ll * lm) * r)
                    * (1 - (1 + ll * lm) * r)
                    / ((1 - a * r) * (1 - b * r) * abs(1 - c * r) ** 2),
                ],
            ]
        )

    return H


def _frame_points(lam, mu, z):
    s = np.conj(z)
    A, B = np.array([lam * s, s]), np.array([mu * s, s])
    if max(np.linalg.norm(A), np.linalg.norm(B)) >= 1:
        raise OutsideBall(f"frame point for z = {z} leaves the ball")
    return A, B


def metric_gram(lam: complex, mu: complex, N: int | None = None) -> Callable[[complex], np.ndarray]:
    """Gram matrix H_ij = <psi_j, psi_i> of psi_1 = k_A, psi_2 = (k_A - k_B)/z.

    A = (lam conj z, conj z), B = (mu conj z, conj z); with this choice the
    frame is holomorphic in z.  N=None uses exact kernel values, an integer
    N uses kernels truncated to degree N.  At z = 0 the frame is extended
    by psi_1 = 1, psi_2 = conj(lam - mu) z_1.
    """
    lam, mu, *_ = _example_constants(lam, mu)

    def at_zero() -> np.ndarray:
        return np.diag([1.0, abs(lam - mu) ** 2]).astype(complex)

    def exact(z: complex) -> np.ndarray:
        if z == 0:
            return at_zero()
        A, B = _frame_points(lam, mu, z)

        def ip(P, Q):  # <k_P, k_Q>
            return kernel_eval(Q, P)

        g11 = ip(A, A)
        g21 = (ip(A, A) - ip(B, A)) / z
        g22 = (ip(A, A) - ip(A, B) - ip(B, A) + ip(B, B)) / abs(z) ** 2
        return np.array([[g11, g21], [np.conj(g21), g22]])

    def truncated(z: complex) -> np.ndarray:
        if z == 0:
            return at_zero()
        A, B = _frame_points(lam, mu, z)
        kA = kernel_coefficients(A, (0, 0), N)[0]
        kB = kernel_coefficients(B, (0, 0), N)[0]
        psi = [kA, (1 / z) * (kA - kB)]
        return np.array([[psi[j].inner(psi[i]) for j in range(2)] for i in range(2)])

    return exact if N is None else truncated


def _laplacian(f: Callable[[complex], float], h: float) -> float:
    """Nine-point isotropic Laplacian of f at 0."""
    e = f(h) + f(-h) + f(1j * h) + f(-1j * h)
    c = f(h + 1j * h) + f(h - 1j * h) + f(-h + 1j * h) + f(-h - 1j * h)
    return (4 * e + c - 20 * f(0)) / (6 * h * h)


def metric_curvature(
    lam: complex,
    mu: complex,
    step: float = 1e-3,
    N: int | None = 60,
    grid_radius: float = 0.3,
    richardson: bool = False,
) -> dict:
    """Curvature d dbar log det H at 0 and a closed-form versus Gram cross-check."""
    if not STEP_RANGE[0] <= step <= STEP_RANGE[1]:
        raise ValidationError(f"step {step} outside [{STEP_RANGE[0]}, {STEP_RANGE[1]}]")
    lam, mu, *_ = _example_constants(lam, mu)
    Hc = metric_closed(lam, mu)
    Hg = metric_gram(lam, mu, N)

    def logdet(z: complex) -> float:
        return float(np.log(np.linalg.det(Hc(z)).real))

    # d dbar = Laplacian / 4
    curv = _laplacian(logdet, step) / 4
    if richardson:
        curv = (4 * _laplacian(logdet, step / 2) / 4 - curv) / 3

    radii = np.linspace(0, grid_radius, 5)
    angles = np.linspace(0, 2 * np.pi, 5, endpoint=False)
    grid = [r * np.exp(1j * a) for r in radii for a in angles]
    err = max(float(np.max(np.abs(Hc(z) - Hg(z)))) for z in grid)

    formula = 3 + abs(lam + mu) ** 2
    return {
        "H_closed": Hc,
        "H_gram": Hg,
        "h0": float(np.linalg.det(Hc(0)).real),
        "h0_gram": float(np.linalg.det(Hg(0)).real),
        "curvature_at_0": float(curv),
        "formula_value": float(formula),
        "cross_check_error": err,
    }


def example_kernel(lam: complex, mu: complex) -> Callable[[complex, complex], np.ndarray]:
    """2x2 reproducing kernel modelling S_2 for the two-line example.

    This is the transpose of the polarized metric: entry (1,2) carries z
    and entry (2,1) carries conj(w), so that K(z, z) is the metric up to
    transposition and K is holomorphic in z.
    """
    lam, mu, a, b, c = _example_constants(lam, mu)
    ll, lm = abs(lam), abs(mu)

    def K(z: complex, w: complex) -> np.ndarray:
        s = z * np.conj(w)
        k11 = 1 / (1 - a * s)
        k12 = np.conj(lam) * (lam - mu) * z / ((1 - a * s) * (1 - np.conj(c) * s))
        k21 = lam * np.conj(lam - mu) * np.conj(w) / ((1 - a * s) * (1 - c * s))
        k22 = (
            abs(lam - mu) ** 2
            * (1 - (1 - ll * lm) * s)
            * (1 - (1 + ll * lm) * s)
            / ((1 - a * s) * (1 - b * s) * (1 - c * s) * (1 - np.conj(c) * s))
        )
        return np.array([[k11, k12], [k21, k22]])

    return K


def normalized_kernel(lam: complex, mu: complex) -> Callable[[complex, complex], np.ndarray]:
    """K^_0(z, w) = K_0(z,0)^{-1} K_0(z,w) K_0(0,w)^{-1}, K_0 = R K R with R = diag(K(0,0))^{-1/2}."""
    K = example_kernel(lam, mu)
    R = np.diag(1 / np.sqrt(np.real(np.diag(K(0, 0)))))

    def K0(z, w):
        return R @ K(z, w) @ R

    def Khat(z, w):
        return np.linalg.solve(K0(z, 0), K0(z, w)) @ np.linalg.inv(K0(0, w))

    return Khat


def admissible_radius(lam: complex, mu: complex) -> float:
    """Radius of a disc on which every kernel denominator stays away from zero."""
    _, _, a, b, c = _example_constants(lam, mu)
    return 0.5 / np.sqrt(max(a, b, abs(c)))


def _commutant_dim(Khat, pairs) -> tuple[int, np.ndarray]:
    rows = []
    for z, w in pairs:
        M = Khat(z, w)
        rows.append(np.kron(M.T, np.eye(2)) - np.kron(np.eye(2), M))
    s = np.linalg.svd(np.vstack(rows), compute_uv=False)
    return int(np.sum(s <= COMMUTANT_RTOL * max(s[0], 1e-300))), s


def _random_pairs(rng, n: int, radius: float) -> list:
    def pt():
        return radius * np.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform())

    return [(pt(), pt()) for _ in range(n)]


def irreducibility_check(
    lam: complex,
    mu: complex,
    samples: Sequence | None = None,
    n_samples: int = 25,
    extra_samples: int = 10,
    seed: int = DEFAULT_SEED,
    step: float = 1e-3,
) -> dict:
    """Dimension of {X : X K^_0(z,w) = K^_0(z,w) X on the samples}.

    Extra random samples are appended afterwards; if they lower the
    dimension the original set was degenerate.  With lam = 0 or
    1 + lam conj(mu) = 0 the off-diagonal entry needed by the argument
    vanishes and the verdict is "inconclusive".
    """
    lam, mu, _, _, c = _example_constants(lam, mu)
    Khat = normalized_kernel(lam, mu)
    rng = np.random.default_rng(seed)
    rad = admissible_radius(lam, mu)
    if samples is None:
        samples = _random_pairs(rng, n_samples, rad)
    samples = [(complex(z), complex(w)) for z, w in samples]
    if any(max(abs(z), abs(w)) > 2 * rad for z, w in samples):
        raise OutsideBall("sample pair outside the admissible disc")
    dim, svals = _commutant_dim(Khat, samples)
    dim_more, _ = _commutant_dim(Khat, samples + _random_pairs(rng, extra_samples, rad))

    h = step
    D = (Khat(h, h) - Khat(h, -h) - Khat(-h, h) + Khat(-h, -h)) / (4 * h * h)

    inconclusive = abs(lam) < 1e-12 or abs(c) < 1e-12
    if inconclusive:
        status = "inconclusive"
    else:
        status = "irreducible" if dim_more == 1 else "reducible"
    return {
        "commutant_dimension": dim,
        "commutant_dimension_extended": dim_more,
        "degenerate_samples": dim_more != dim,
        "irreducible": None if inconclusive else dim_more == 1,
        "status": status,
        "second_derivative_diagonal": np.diag(D).copy(),
        "expected_diagonal": np.array([1.0, 2 + abs(lam + mu) ** 2]),
        "singular_values": svals,
    }


def reflection_witness(q: QuotientModel, j: int = 0) -> dict:
    """Test whether z_j -> -z_j preserves H_p and commutes with the other shifts.

    When p is even in z_j this reflection is a non-scalar unitary in the
    commutant of S_i for i != j, so those compressions are reducible.
    """
    ctx = basis(q.d, q.N)
    signs = np.array([(-1) ** a[j] for a in ctx.indices], dtype=float)
    Rq = q.basis.conj().T @ (signs[:, None] * q.basis)
    invariance = float(np.linalg.norm(Rq @ Rq.conj().T - np.eye(q.dim), 2))
    comm = max(float(np.linalg.norm(Rq @ S - S @ Rq, 2)) for i, S in enumerate(q.shifts) if i != j)
    scalar = float(min(np.linalg.norm(Rq - np.eye(q.dim), 2), np.linalg.norm(Rq + np.eye(q.dim), 2)))
    return {"invariance_defect": invariance, "commutator": comm, "distance_to_scalar": scalar}

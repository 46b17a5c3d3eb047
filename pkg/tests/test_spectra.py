from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import jordan_tuple, perturbed_pair

from pickgrass.ball import Divisor, optimal_matching_distance
from pickgrass.errors import DimensionMismatch, ValidationError
from pickgrass.spectra import (
    CommutingTuple,
    elsner_bound,
    joint_spectrum,
    joint_spectrum_points,
    root_subspace,
    row_to_col_bound,
    spectral_perturbation_check,
)

S = np.array([[1.0, 1.0], [0.0, 1.0]])
SIM = np.array([S @ np.diag(D) @ np.linalg.inv(S) for D in ([0.1, 0.2], [0.3, -0.1])])


def brute_root_dim(A: np.ndarray, lam) -> int:
    """dim of the joint kernel of all (A - lam)^alpha, |alpha| = n, by rank counting."""
    d, n, _ = A.shape
    blocks = []
    for combo in itertools.combinations_with_replacement(range(d), n):
        M = np.eye(n, dtype=complex)
        for j in combo:
            M = M @ (A[j] - lam[j] * np.eye(n))
        blocks.append(M)
    return n - np.linalg.matrix_rank(np.vstack(blocks), tol=1e-7)


class TestCommutingTuple:
    def test_defect(self):
        A = CommutingTuple([[[0, 1], [0, 0]], [[1, 0], [0, 0]]])
        assert A.commutation_defect > 0.5
        with pytest.raises(ValidationError):
            A.require_commuting()

    def test_shape_checks(self):
        with pytest.raises(DimensionMismatch):
            CommutingTuple(np.zeros((2, 2, 3)))

    def test_single_matrix_promoted(self):
        assert CommutingTuple(np.eye(3)).d == 1

    def test_row_col_relation(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            A, _ = jordan_tuple(rng, 3, 3)
            T = CommutingTuple(A)
            assert T.col_norm() <= row_to_col_bound(T) + 1e-12


class TestJointSpectrum:
    def test_diagonal(self):
        A = np.array([np.diag([0.1, 0.2, 0.3]), np.diag([0.0, -0.2j, 0.1])])
        X = joint_spectrum(A)
        assert optimal_matching_distance(X, Divisor.from_points([[0.1, 0], [0.2, -0.2j], [0.3, 0.1]])) < 1e-14

    def test_nilpotent(self):
        X = joint_spectrum(np.array([[[0, 0.5], [0, 0]], np.zeros((2, 2))]))
        assert X.multiplicities == [2]
        assert np.allclose(X.points[0], 0)

    def test_similarity_example(self):
        X = joint_spectrum(SIM)
        target = Divisor.from_points([[0.1, 0.3], [0.2, -0.1]])
        assert optimal_matching_distance(X, target) < 1e-12

    def test_noncommuting_rejected(self):
        with pytest.raises(ValidationError):
            joint_spectrum(np.array([[[0, 1], [0, 0]], [[0, 0], [1, 0]]]))

    def test_warns_outside_ball(self):
        with pytest.warns(RuntimeWarning):
            joint_spectrum(np.array([np.diag([2.0, 0.1])]))

    def test_deterministic(self):
        A, _ = jordan_tuple(np.random.default_rng(1), 4, 3)
        assert joint_spectrum(A) == joint_spectrum(A)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(1, 3))
    def test_matches_construction(self, seed, n, d):
        A, X = jordan_tuple(np.random.default_rng(seed), n, d)
        Y = joint_spectrum(A)
        assert Y.degree == n
        assert optimal_matching_distance(X, Y) <= 1e-8

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_multiplicity_is_root_dimension(self, seed):
        A, _ = jordan_tuple(np.random.default_rng(seed), 4, 2)
        pts, mults = joint_spectrum_points(A)
        for p, m in zip(pts, mults):
            assert root_subspace(A, p, rtol=1e-9).shape[1] == m
            assert brute_root_dim(A, p) == m

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_similarity_invariance(self, seed):
        rng = np.random.default_rng(seed)
        A, _ = jordan_tuple(rng, 4, 2)
        Sm = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        while np.linalg.cond(Sm) > 20:
            Sm = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        B = CommutingTuple(A).similar(Sm)
        assert optimal_matching_distance(joint_spectrum(A), joint_spectrum(B)) <= 1e-8


class TestRootSubspace:
    def test_diagonal_entry(self):
        A = np.array([np.diag([0.1, 0.2, 0.1]), np.diag([0.0, 0.0, 0.0])])
        V = root_subspace(A, [0.1, 0.0])
        P = V @ V.conj().T
        assert np.allclose(P, np.diag([1, 0, 1]))

    def test_nilpotent_everything(self):
        V = root_subspace(np.array([[[0, 0.5], [0, 0]], np.zeros((2, 2))]), [0, 0])
        assert V.shape[1] == 2

    def test_similarity_eigenvector(self):
        V = root_subspace(SIM, [0.1, 0.3])
        assert V.shape[1] == 1
        e = S[:, 0] / np.linalg.norm(S[:, 0])
        assert abs(abs(np.vdot(V[:, 0], e)) - 1) < 1e-12

    def test_empty_off_spectrum(self):
        assert root_subspace(SIM, [0.5, 0.5]).shape[1] == 0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            root_subspace(SIM, [0.1])


class TestPerturbation:
    def test_equal(self):
        r = spectral_perturbation_check(SIM, SIM)
        assert r["hausdorff"] == r["matching"] == r["elsner_bound"] == 0 and r["holds"]

    def test_scalar(self):
        r = spectral_perturbation_check([[[0.5]]], [[[0.6]]])
        assert r["hausdorff"] == pytest.approx(0.1, abs=1e-15)
        assert r["elsner_bound"] == pytest.approx(0.1, abs=1e-15)
        assert r["holds"]

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatch):
            spectral_perturbation_check(SIM, SIM[:1])

    def test_bound_formula(self):
        A = np.array([np.diag([0.3, 0.1])])
        B = np.array([np.diag([0.3, 0.1 + 1e-4])])
        M = 0.3
        assert elsner_bound(A, B) == pytest.approx(np.sqrt(2) * np.sqrt(2 * M) * 1e-2, rel=1e-9)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(1, 3), st.sampled_from([1e-6, 1e-4, 1e-2]))
    def test_bound_holds(self, seed, n, d, eps):
        A, B = perturbed_pair(np.random.default_rng(seed), n, d, eps)
        r = spectral_perturbation_check(A, B)
        assert r["holds"]
        assert r["hausdorff"] <= r["matching"] + 1e-12

    def test_continuity_in_trend(self):
        rng = np.random.default_rng(7)
        A, _ = jordan_tuple(rng, 3, 2)
        # perturb along a commuting direction: A + t * A^2
        X = joint_spectrum(A)
        dists = []
        for t in [1e-1, 1e-2, 1e-3, 1e-4]:
            At = np.array([a + t * a @ a for a in A])
            dists.append(optimal_matching_distance(joint_spectrum(At), X))
        assert all(b < a for a, b in zip(dists, dists[1:]))

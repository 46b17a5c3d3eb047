from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import ball_point, disc_point, separated_points

from pickgrass.ball import (
    BallAutomorphism,
    Divisor,
    apply_automorphism,
    optimal_matching_distance,
    pseudo_distance,
)
from pickgrass.errors import Unsupported, ValidationError
from pickgrass.grassmann import (
    CoinvariantModel,
    aut_act,
    compressed_tuple,
    example_distance_formula,
    example_distance_sq,
    example_projection_gap,
    kernel_identity_error,
    lower,
    lowering_matrices,
    non_invertibility_witness,
    phi,
    psi,
    round_trip,
    same_span,
    validate_coinvariant_model,
)

LAM = np.array([0.3, -0.2j])


def D(pts, mults=None):
    return Divisor.from_points(pts, mults)


class TestValidation:
    def test_single_kernel(self):
        assert validate_coinvariant_model(CoinvariantModel.kernel_span([LAM]))["valid"]

    def test_kernel_and_first_derivative(self):
        m = CoinvariantModel.from_groups([(LAM, [{(0, 0): 1}, {(1, 0): 1}])])
        assert validate_coinvariant_model(m)["valid"]

    def test_derivative_alone(self):
        m = CoinvariantModel.from_groups([(LAM, [{(1, 0): 1}])])
        rep = validate_coinvariant_model(m)
        assert not rep["valid"] and "group 0" in rep["witness"]

    def test_missing_intermediate_order(self):
        m = CoinvariantModel.from_groups([(LAM, [{(0, 0): 1}, {(2, 0): 1}])])
        assert not validate_coinvariant_model(m)["valid"]

    def test_mixed_combination_closed(self):
        # span{k, k^(e1) + 2 k^(e2)} is closed: lowering returns multiples of k
        m = CoinvariantModel.from_groups([(LAM, [{(0, 0): 1}, {(1, 0): 1, (0, 1): 2}])])
        assert validate_coinvariant_model(m)["valid"]

    def test_lowering_rule(self):
        out = lower({(2, 1): 1.0}, LAM, 0)
        assert out == {(2, 1): np.conj(LAM[0]), (1, 1): 2.0}

    def test_shared_base_point(self):
        with pytest.raises(ValidationError):
            CoinvariantModel.from_groups([(LAM, [{(0, 0): 1}]), (LAM, [{(0, 0): 1}])])

    def test_invalid_model_rejected_by_psi(self):
        with pytest.raises(ValidationError):
            psi(CoinvariantModel.from_groups([(LAM, [{(1, 0): 1}])]))


class TestPsi:
    def test_two_kernels(self):
        X = psi(CoinvariantModel.kernel_span([[0, 0], [0.5, 0]]))
        assert optimal_matching_distance(X, D([[0, 0], [0.5, 0]])) < 1e-12

    def test_jet_at_origin(self):
        X = psi(CoinvariantModel.jet([0, 0], 2))
        assert X.multiplicities == [2] and np.allclose(X.points[0], 0, atol=1e-12)

    def test_single_kernel(self):
        assert optimal_matching_distance(psi(CoinvariantModel.kernel_span([LAM])), D([LAM])) < 1e-14

    @pytest.mark.parametrize("n", [2, 3, 5, 8])
    def test_jet_degree_equals_dimension(self, n):
        m = CoinvariantModel.jet(LAM, n, direction=1)
        X = psi(m)
        assert X.degree == n == m.dim
        assert optimal_matching_distance(X, D([LAM], [n])) < 1e-8

    def test_biorthogonal_switch_on_ill_conditioned_jet(self):
        m = CoinvariantModel.jet([0.7, 0.0], 12)
        assert np.linalg.cond(m.gram) > 1e4
        A = compressed_tuple(m)
        assert A.commutation_defect < 1e-10
        assert optimal_matching_distance(psi(m), D([[0.7, 0.0]], [12])) < 1e-8

    def test_adjoint_diagonal_in_kernel_basis(self):
        pts = [np.array([0.1, 0.2]), np.array([-0.3j, 0.0])]
        m = CoinvariantModel.kernel_span(pts)
        A = compressed_tuple(m)
        for j, C in enumerate(lowering_matrices(m)):
            assert np.allclose(C, np.diag([np.conj(p[j]) for p in pts]), atol=1e-15)
            assert np.allclose(np.sort_complex(np.linalg.eigvals(A[j])), np.sort_complex([p[j] for p in pts]))


class TestPhi:
    def test_plane_pair(self):
        X = D([[0, 0], [0.5, 0]])
        r = phi(X)
        assert r.chain.width == 3
        assert same_span(r.model, CoinvariantModel.kernel_span([[0, 0], [0.5, 0]]))

    def test_disc_double_zero(self):
        r = phi(D([[0.0]], [2]))
        for z in [0.3, -0.2 + 0.5j]:
            assert r.chain([z])[0] == pytest.approx(z * z, abs=1e-15)
        # span{1, z} = span{k_0, k_0^(1)}
        assert same_span(r.model, CoinvariantModel.jet([0.0], 2))

    def test_single_origin(self):
        r = phi(D([[0, 0, 0]]))
        assert np.allclose(r.chain([0.1, 0.2, 0.3]), [-0.1, -0.2, -0.3])
        assert r.model.dim == 1

    def test_multiple_point_unsupported(self):
        with pytest.raises(Unsupported):
            phi(D([[0.1, 0.0]], [2]))

    def test_truncated_projection_requested(self):
        r = phi(D([[0.0]]), N=5)
        E = np.zeros((6, 6))
        E[0, 0] = 1
        assert np.allclose(r.projection, E, atol=1e-14)


class TestKernelIdentity:
    def test_origin(self):
        X = D([[0.0, 0.0]])
        rng = np.random.default_rng(0)
        samples = [(ball_point(rng, 2, 0.9), ball_point(rng, 2, 0.9)) for _ in range(20)]
        assert kernel_identity_error(phi(X).chain, X, samples) <= 1e-14

    def test_disc_pair(self):
        X = D([[0.3], [-0.4]])
        rng = np.random.default_rng(1)
        samples = [([disc_point(rng, 0.95)], [disc_point(rng, 0.95)]) for _ in range(100)]
        assert kernel_identity_error(phi(X).chain, X, samples) <= 1e-10

    def test_coincidence_pairs_force_vanishing(self):
        X = D([[0.1, 0.2], [-0.3, 0.1j], [0.0, 0.5]])
        r = phi(X)
        assert kernel_identity_error(r.chain, X, [(p, p) for p in X.points]) <= 1e-12


class TestRoundTrip:
    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.integers(1, 5))
    def test_multiplicity_free(self, seed, d, n):
        rng = np.random.default_rng(seed)
        X = D(separated_points(rng, d, n, 0.8, 0.05))
        r = round_trip(X, rng, n_samples=10)
        assert r["d_o_error"] <= 1e-9
        assert r["kernel_identity_error"] <= 1e-9

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 3))
    def test_disc_with_multiplicities(self, seed, k):
        rng = np.random.default_rng(seed)
        pts = separated_points(rng, 1, k, 0.8, 0.5, metric=pseudo_distance)
        X = D(pts, [int(m) for m in rng.integers(1, 5, size=k)])
        r = round_trip(X, rng, n_samples=10)
        assert r["d_o_error"] <= 1e-9
        assert r["kernel_identity_error"] <= 1e-9


class TestAutomorphisms:
    def test_identity(self):
        m = CoinvariantModel.kernel_span([[0.1, 0.2], [0.3, -0.4j]])
        assert same_span(aut_act(m, BallAutomorphism.identity(2)), m)

    def test_involution_sends_point_to_origin(self):
        m = CoinvariantModel.kernel_span([[0.1, 0.2], [0.3, -0.4j]])
        moved = aut_act(m, BallAutomorphism.involution([0.3, -0.4j]))
        assert min(np.linalg.norm(g.lam) for g in moved.groups) < 1e-15

    def test_derivative_models_unsupported(self):
        with pytest.raises(Unsupported):
            aut_act(CoinvariantModel.jet(LAM, 2), BallAutomorphism.identity(2))

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.integers(1, 4))
    def test_equivariance(self, seed, d, n):
        rng = np.random.default_rng(seed)
        X = D(separated_points(rng, d, n, 0.8, 0.05))
        g = BallAutomorphism.random(d, rng)
        m = CoinvariantModel.kernel_span(X)
        lhs = psi(aut_act(m, g))
        rhs = apply_automorphism(g, psi(m))
        assert optimal_matching_distance(lhs, rhs) <= 1e-9


class TestExamples:
    def test_distance_at_five(self):
        assert example_distance_sq(5) == pytest.approx(2 * (1 - math.sqrt(24) / 5), abs=1e-12)

    def test_distance_formula(self):
        for n in range(2, 51):
            assert abs(example_distance_sq(n) - example_distance_formula(n)) <= 1e-10

    def test_projection_gap_decreasing(self):
        gaps = [example_projection_gap(n) for n in range(5, 30)]
        assert all(b < a for a, b in zip(gaps, gaps[1:]))

    def test_non_invertibility(self):
        w = non_invertibility_witness()
        assert w["same_divisor"] and not w["same_span"]
        assert w["psi_1"].multiplicities == [2]

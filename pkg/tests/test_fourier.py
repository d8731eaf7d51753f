import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from se2attn.fourier import (
    EPS_BF16,
    EPS_FP16,
    Axis,
    approx_error,
    approx_errors,
    basis,
    basis_vector,
    coefficients,
    error_sweep,
    project,
    quadrature_nodes,
    spectral_norm,
    target_curve,
)
from se2attn.geometry import IDENTITY, Pose2

from oracles import bessel_j, jacobi_anger_x, jacobi_anger_y

# Frozen from the power-series oracle in tests/oracles.py (cross-checked against scipy.special.jv).
J0_AT_2 = 0.22389077914123567
TWICE_J1_AT_2 = 1.1534496155137468


def test_oracle_values_are_frozen():
    assert bessel_j(0, 2.0) == pytest.approx(J0_AT_2, abs=1e-15)
    assert 2 * bessel_j(1, 2.0) == pytest.approx(TWICE_J1_AT_2, abs=1e-15)


class TestBasis:
    def test_examples(self):
        for z in (-2.0, 0.0, 1.3, 100.0):
            assert basis(0, z) == 1.0
        assert basis(1, math.pi / 2) == pytest.approx(1.0, abs=1e-16)
        assert abs(basis(4, math.pi / 4)) < 1e-15

    def test_vector_examples(self):
        np.testing.assert_array_equal(basis_vector(0.0, 5), [1, 0, 1, 0, 1])
        np.testing.assert_allclose(basis_vector(math.pi, 4), [1, 0, -1, 0], atol=1e-15)
        np.testing.assert_allclose(basis_vector(0.7, 12), [basis(i, 0.7) for i in range(12)], atol=1e-15)

    def test_vector_rejects_empty_basis(self):
        with pytest.raises(ValueError):
            basis_vector(0.3, 0)

    def test_negative_index(self):
        with pytest.raises(ValueError):
            basis(-1, 0.0)

    @pytest.mark.parametrize("i", range(8))
    @pytest.mark.parametrize("j", range(8))
    def test_orthogonality(self, i, j):
        inner, _ = quad(lambda z: basis(i, z) * basis(j, z), -math.pi, math.pi, limit=200)
        if i != j:
            assert abs(inner / math.pi) < 1e-10
        else:
            assert inner == pytest.approx(2 * math.pi if i == 0 else math.pi, abs=1e-10)


class TestQuadrature:
    @pytest.mark.parametrize("F", [1, 2, 5, 12, 13, 28])
    def test_band_limited_functions_are_recovered_exactly(self, F, rng):
        # random trig polynomial with every frequency below F
        freqs = np.arange(F)
        a = rng.normal(size=F)
        b = rng.normal(size=F)
        z = quadrature_nodes(2 * F)
        samples = (a[:, None] * np.cos(freqs[:, None] * z) + b[:, None] * np.sin(freqs[:, None] * z)).sum(axis=0)
        expected = np.zeros(F)
        for i in range(F):
            k = (i + 1) // 2
            expected[i] = a[k] if i % 2 == 0 else b[k]
        np.testing.assert_allclose(project(samples, F), expected, atol=1e-12)

    def test_project_needs_enough_points(self):
        with pytest.raises(ValueError):
            project(np.ones(7), 4)


class TestCoefficients:
    def test_origin_key(self):
        c = coefficients(0.0, 0.0, 8, Axis.X, 16)
        expected = np.zeros(8)
        expected[0] = 1.0
        np.testing.assert_allclose(c.gamma, expected, atol=1e-14)
        np.testing.assert_allclose(c.lambda_, 0.0, atol=1e-14)

    def test_bessel_examples(self):
        c = coefficients(2.0, 0.0, 12, Axis.X, 4096)
        assert c.gamma[0] == pytest.approx(J0_AT_2, abs=1e-9)
        assert c.lambda_[2] == pytest.approx(TWICE_J1_AT_2, abs=1e-9)

    @pytest.mark.parametrize("r", [1.0, 2.0, 4.0, 8.0])
    def test_jacobi_anger_x(self, r):
        c = coefficients(r, 0.0, 28, Axis.X, 4096)
        gamma, lam = jacobi_anger_x(r, 28)
        np.testing.assert_allclose(c.gamma, gamma, atol=1e-9)
        np.testing.assert_allclose(c.lambda_, lam, atol=1e-9)

    @pytest.mark.parametrize("r", [1.0, 2.0, 4.0, 8.0])
    def test_jacobi_anger_y(self, r):
        c = coefficients(r, 0.0, 28, Axis.Y, 4096)
        gamma, lam = jacobi_anger_y(r, 28)
        np.testing.assert_allclose(c.gamma, gamma, atol=1e-9)
        np.testing.assert_allclose(c.lambda_, lam, atol=1e-9)

    def test_default_points_is_2f(self):
        a = coefficients(1.5, -0.5, 10, Axis.Y)
        b = coefficients(1.5, -0.5, 10, Axis.Y, 20)
        np.testing.assert_array_equal(a.gamma, b.gamma)

    def test_rejects_under_resolved_quadrature(self):
        with pytest.raises(ValueError):
            coefficients(1.0, 1.0, 8, Axis.X, 15)

    def test_rejects_non_finite_key(self):
        with pytest.raises(ValueError):
            coefficients(math.nan, 0.0, 4)

    @settings(max_examples=200, deadline=None)
    @given(
        st.floats(-20, 20),
        st.floats(-20, 20),
        st.integers(1, 30),
        st.sampled_from(list(Axis)),
    )
    def test_bounded_by_two(self, x, y, F, axis):
        c = coefficients(x, y, F, axis)
        assert np.all(np.isfinite(c.gamma)) and np.all(np.isfinite(c.lambda_))
        assert np.max(np.abs(c.gamma)) <= 2.0 and np.max(np.abs(c.lambda_)) <= 2.0


class TestSpectralNorm:
    def test_examples(self):
        assert spectral_norm(np.eye(4)) == pytest.approx(1.0, rel=1e-15)
        assert spectral_norm(np.zeros((3, 5))) == 0.0
        assert spectral_norm(np.diag([3.0, -5.0])) == pytest.approx(5.0, rel=1e-15)

    @pytest.mark.parametrize("shape", [(6, 6), (2, 2), (6, 14), (14, 6), (1, 5), (32, 24)])
    def test_matches_lapack(self, shape, rng):
        m = rng.normal(size=(200,) + shape)
        ours = spectral_norm(m)
        ref = np.linalg.norm(m, 2, axis=(-2, -1))
        np.testing.assert_allclose(ours, ref, rtol=1e-10)

    def test_rank_deficient_and_scaled(self, rng):
        u = rng.normal(size=(6, 1))
        m = 1e-7 * (u @ u.T)
        assert spectral_norm(m) == pytest.approx(np.linalg.norm(m, 2), rel=1e-10)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            spectral_norm(np.zeros((0, 3)))


def _sample_keys_and_headings(rng, radius, count):
    ang = rng.uniform(0, 2 * math.pi, count)
    heading = rng.uniform(0, 2 * math.pi, count)
    zeros = np.zeros(count)
    queries = np.stack([zeros, zeros, heading], axis=1)
    keys = np.stack([radius * np.cos(ang), radius * np.sin(ang), zeros], axis=1)
    return queries, keys


class TestApproxError:
    @pytest.mark.parametrize("F", [1, 2, 4, 12, 28])
    def test_identity_is_exact(self, F):
        assert approx_error(IDENTITY, IDENTITY, F) <= 1e-12

    def test_radius_two_basis_twelve(self, rng):
        queries, keys = _sample_keys_and_headings(rng, 2.0, 1000)
        assert np.mean(approx_errors(queries, keys, 12)) <= 1.5e-3

    def test_mean_error_non_increasing_in_basis_size(self, rng):
        queries, keys = _sample_keys_and_headings(rng, 2.0, 1000)
        means = [np.mean(approx_errors(queries, keys, F)) for F in (4, 8, 12, 18, 28)]
        assert all(b <= a for a, b in zip(means, means[1:])), means

    def test_independent_of_query_position(self, rng):
        queries, keys = _sample_keys_and_headings(rng, 3.0, 500)
        base = approx_errors(queries, keys, 12)
        moved = queries.copy()
        moved[:, :2] = rng.uniform(-10, 10, (500, 2))
        np.testing.assert_allclose(approx_errors(moved, keys, 12), base, atol=1e-12, rtol=0)

    def test_heading_block_is_exact(self):
        # pure heading offsets at the origin: no translation error, no heading error
        assert approx_error(Pose2(0, 0, 1.0), Pose2(0, 0, -2.5), 3) <= 1e-14


class TestErrorSweep:
    def test_paper_basis_sizes(self):
        stats = {(s.radius, s.basis_size): s for s in error_sweep([2.0, 4.0, 8.0], [12, 18, 28], 1000, 42)}
        assert stats[(4.0, 18)].mean_error <= 1.5e-3
        assert stats[(8.0, 28)].mean_error <= 1.5e-3
        assert stats[(2.0, 12)].mean_error <= 1.5e-3
        means = [stats[(r, 12)].mean_error for r in (2.0, 4.0, 8.0)]
        assert means[0] < means[1] < means[2]

    def test_stats_shape_and_order(self):
        stats = error_sweep([1.0, 3.0], [4, 6], 50, 7)
        assert [(s.radius, s.basis_size) for s in stats] == [(1.0, 4), (1.0, 6), (3.0, 4), (3.0, 6)]
        for s in stats:
            assert 0 <= s.p025_error <= s.p975_error
            assert s.mean_error >= 0
            assert s.samples == 50 and s.seed == 7

    def test_deterministic(self):
        assert error_sweep([2.0], [8], 100, 3) == error_sweep([2.0], [8], 100, 3)

    def test_percentiles_use_nearest_rank(self):
        # one sample: every percentile is that sample
        (s,) = error_sweep([2.0], [6], 1, 0)
        assert s.p025_error == s.mean_error == s.p975_error

    def test_under_resolved_basis_exceeds_bf16(self):
        (s,) = error_sweep([8.0], [8], 1000, 42)
        assert s.mean_error > EPS_BF16

    @pytest.mark.parametrize(
        "kwargs",
        [dict(radii=[], basis_sizes=[4]), dict(radii=[1.0], basis_sizes=[]), dict(radii=[-1.0], basis_sizes=[4]),
         dict(radii=[1.0], basis_sizes=[4], samples=0)],
    )
    def test_invalid_arguments(self, kwargs):
        with pytest.raises(ValueError):
            error_sweep(**kwargs)

    def test_reference_epsilons(self):
        assert 1.0 + EPS_FP16 == np.float16(1.0) + np.float16(EPS_FP16)
        assert np.float16(1.0) + np.float16(EPS_FP16 / 2) == np.float16(1.0)
        assert EPS_FP16 == pytest.approx(9.766e-4, rel=1e-3)
        assert EPS_BF16 == pytest.approx(7.813e-3, rel=1e-3)


class TestTargetCurve:
    def test_origin_key(self):
        curve = target_curve(0.0, 0.0, 6, grid=33)
        np.testing.assert_allclose(curve.exact, 1.0, atol=0)
        np.testing.assert_allclose(curve.approx, 1.0, atol=1e-14)

    def test_radius_two_twelve_terms(self):
        curve = target_curve(2.0, 0.0, 12, grid=721)
        # oracle: exact Fourier coefficients from the Bessel expansion, evaluated pointwise
        gamma, _ = jacobi_anger_x(2.0, 12)
        oracle_approx = np.array([sum(gamma[i] * basis(i, t) for i in range(12)) for t in curve.theta])
        np.testing.assert_allclose(curve.exact, np.cos(2.0 * np.cos(curve.theta)), atol=1e-15)
        np.testing.assert_allclose(curve.approx, oracle_approx, atol=1e-6)
        assert np.max(np.abs(curve.exact - curve.approx)) <= 1e-2

    def test_rotating_key_shifts_exact_curve(self):
        grid = 361
        shift = 30  # grid steps of one degree
        delta = shift * 2 * math.pi / (grid - 1)
        base = target_curve(1.5, 2.0, 12, grid)
        c, s = math.cos(delta), math.sin(delta)
        rotated = target_curve(c * 1.5 - s * 2.0, s * 1.5 + c * 2.0, 12, grid)
        np.testing.assert_allclose(rotated.exact[shift:], base.exact[:-shift], atol=1e-12)

    def test_rejects_tiny_grid(self):
        with pytest.raises(ValueError):
            target_curve(1.0, 0.0, 4, grid=1)

import math

import numpy as np
import pytest

from sqgbox.basis import DomainSpec, SpectralField, build_basis, \
    synthesize_derivative, unit_field
from sqgbox.checks import check_velocity
from sqgbox.config import SolverConfig
from sqgbox.dynamics import gamma_tensor, nonlinear_term, nonlinear_via_gamma, \
    rhs, velocity
from sqgbox.errors import ConfigurationError, ShapeMismatchError
from sqgbox.spectral import dot, sobolev_norm

from conftest import random_field_on

# Interaction entry for modes (1,1), (1,2), (2,1) on the pi-square, frozen
# from an Nquad = 8J brute-force quadrature oracle before the build; the
# closed form is -3 / (2 sqrt(2) pi).
GAMMA_112_REGRESSION = -0.3376186185589148


class TestVelocity:
    def test_zero_field(self, basis_j4):
        v = velocity(SpectralField(np.zeros(16), basis_j4))
        assert not v.u1.values.any()
        assert not v.u2.values.any()

    def test_first_mode_closed_form(self, basis_j2):
        v = velocity(unit_field(basis_j2, 1, 1))
        X, Y = np.meshgrid(basis_j2.quad_x.nodes, basis_j2.quad_y.nodes, indexing="ij")
        amp = (2.0 / math.pi) * 2.0 ** -0.5
        assert np.max(np.abs(v.u1.values + amp * np.sin(X) * np.cos(Y))) < 1e-12
        assert np.max(np.abs(v.u2.values - amp * np.cos(X) * np.sin(Y))) < 1e-12

    def test_divergence_free_and_tangent(self, basis_j4):
        theta = random_field_on(basis_j4, seed=21)
        report = check_velocity(velocity(theta))
        assert report.passed
        assert report.metadata["worst_divergence"] <= 1e-10
        assert report.metadata["worst_boundary_trace"] <= 1e-12

    def test_sobolev_proxy_scales_linearly(self, basis_j4):
        # grid H1-style proxy of u is finite and exactly linear in theta
        def proxy(theta):
            v = velocity(theta)
            psi = v.psi
            parts = [v.u1.values, v.u2.values,
                     synthesize_derivative(psi, dx=1, dy=1).values,
                     synthesize_derivative(psi, dx=2, dy=0).values,
                     synthesize_derivative(psi, dx=0, dy=2).values]
            return np.sqrt(sum(np.sum(p ** 2) for p in parts))

        theta = random_field_on(basis_j4, seed=22)
        p1 = proxy(theta)
        p2 = proxy(SpectralField(2.0 * theta.coeffs, basis_j4))
        assert np.isfinite(p1) and p1 > 0
        assert p2 == 2.0 * p1


class TestNonlinearTerm:
    def test_single_mode_self_interaction_cancels(self, basis_j4):
        out = nonlinear_term(unit_field(basis_j4, 1, 1, 3.0))
        assert np.max(np.abs(out.coeffs)) < 1e-13

    def test_zero_field(self, basis_j4):
        out = nonlinear_term(SpectralField(np.zeros(16), basis_j4))
        assert not out.coeffs.any()

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_matches_gamma_contraction(self, seed):
        basis = build_basis(DomainSpec(J=3))
        gamma = gamma_tensor(basis)
        theta = random_field_on(basis, seed=seed, decay=0.0)
        a = nonlinear_term(theta).coeffs
        b = nonlinear_via_gamma(theta, gamma).coeffs
        assert np.max(np.abs(a - b)) < 1e-10

    def test_orthogonal_to_theta(self, basis_j4):
        theta = random_field_on(basis_j4, seed=23, decay=0.0)
        val = abs(dot(theta, nonlinear_term(theta)))
        assert val <= 1e-11 * float(theta.coeffs @ theta.coeffs)


class TestGammaTensor:
    def test_antisymmetry_and_diagonals(self):
        basis = build_basis(DomainSpec(J=3))
        g = gamma_tensor(basis).values
        assert np.max(np.abs(g + g.transpose(0, 2, 1))) < 1e-12
        # gamma[j,k,k] = 0 by antisymmetry
        assert np.max(np.abs(np.einsum("jkk->jk", g))) < 1e-13
        # gamma[j,j,l] = 0 pointwise (grad-perp a . grad a = 0)
        assert np.max(np.abs(np.einsum("jjl->jl", g))) < 1e-13

    def test_frozen_regression_entry(self, basis_j2):
        g = gamma_tensor(basis_j2)
        j = basis_j2.mode_index(1, 1)
        k = basis_j2.mode_index(1, 2)
        l = basis_j2.mode_index(2, 1)
        assert g.values[j, k, l] == pytest.approx(GAMMA_112_REGRESSION, abs=1e-12)

    def test_size_guard(self):
        basis = build_basis(DomainSpec(J=9, Nquad=20))
        with pytest.raises(ConfigurationError):
            gamma_tensor(basis)
        g = gamma_tensor(basis, allow_large=True)
        assert g.values.shape == (81, 81, 81)

    def test_basis_mismatch_rejected(self, basis_j2, basis_j4):
        gamma = gamma_tensor(basis_j2)
        with pytest.raises(ShapeMismatchError):
            nonlinear_via_gamma(random_field_on(basis_j4), gamma)

    def test_single_mode_contraction_zero(self, basis_j2):
        gamma = gamma_tensor(basis_j2)
        out = nonlinear_via_gamma(unit_field(basis_j2, 2, 1, 1.3), gamma)
        assert np.max(np.abs(out.coeffs)) < 1e-13


class TestRhs:
    def test_inviscid_single_mode_is_zero(self, basis_j4):
        cfg = SolverConfig(J=4, kappa=0.0).validate()
        out = rhs(unit_field(basis_j4, 1, 1), cfg)
        assert np.max(np.abs(out.coeffs)) < 1e-13

    def test_first_mode_dissipation_closed_form(self, basis_j2):
        cfg = SolverConfig(J=2, kappa=1.0, alpha=0.5).validate()
        out = rhs(unit_field(basis_j2, 1, 1), cfg)
        expected = np.zeros(4)
        expected[0] = -math.sqrt(2.0)
        assert np.max(np.abs(out.coeffs - expected)) < 1e-13

    def test_energy_pairing_matches_dissipation(self, basis_j4):
        cfg = SolverConfig(J=4, kappa=0.7, alpha=0.6).validate()
        theta = random_field_on(basis_j4, seed=31, decay=0.0)
        lhs = dot(theta, rhs(theta, cfg))
        expected = -cfg.kappa * sobolev_norm(theta, cfg.alpha) ** 2
        assert lhs == pytest.approx(expected, abs=1e-11 * max(1.0, abs(expected)))

    def test_gamma_path(self, basis_j2):
        cfg = SolverConfig(J=2, kappa=0.5, alpha=0.5, nonlinear_path="gamma").validate()
        cfg.gamma = gamma_tensor(basis_j2)
        theta = random_field_on(basis_j2, seed=32)
        a = rhs(theta, cfg).coeffs
        cfg2 = SolverConfig(J=2, kappa=0.5, alpha=0.5).validate()
        b = rhs(theta, cfg2).coeffs
        assert np.max(np.abs(a - b)) < 1e-12

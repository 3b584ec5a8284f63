import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sqgbox.basis import (DomainSpec, GridField, SpectralField, analyze, build_basis,
                          evaluate_modes, grid_lp_norm, integrate, quadrature_grid,
                          synthesize, synthesize_derivative, unit_field)
from sqgbox.errors import ConfigurationError, ShapeMismatchError

from conftest import random_field_on


class TestDomainSpec:
    def test_defaults_resolve_nquad(self):
        d = DomainSpec(J=8)
        assert d.Nquad == 18

    @pytest.mark.parametrize("kwargs", [
        dict(Lx=-1.0), dict(Ly=0.0), dict(J=0), dict(J=4, Nquad=9),
    ])
    def test_invalid_parameters_rejected(self, kwargs):
        with pytest.raises(ConfigurationError):
            DomainSpec(**kwargs)


class TestBuildBasis:
    def test_single_mode_unit_square_pi(self):
        b = build_basis(DomainSpec(J=1))
        assert b.modes == ((1, 1),)
        assert b.lambdas[0] == pytest.approx(2.0, abs=1e-15)

    def test_first_four_eigenvalues_and_tie_break(self):
        b = build_basis(DomainSpec(J=2))
        assert np.allclose(b.lambdas, [2.0, 5.0, 5.0, 8.0], atol=1e-14)
        # tie at lambda=5 resolved lexicographically
        assert b.modes[1] == (1, 2)
        assert b.modes[2] == (2, 1)

    def test_anisotropic_rectangle(self):
        b = build_basis(DomainSpec(Lx=2 * math.pi, Ly=math.pi, J=1))
        assert b.lambdas[0] == pytest.approx(1.25, abs=1e-14)

    def test_deterministic_ordering(self):
        a = build_basis(DomainSpec(J=5))
        b = build_basis(DomainSpec(J=5))
        assert a.modes == b.modes
        assert np.array_equal(a.lambdas, b.lambdas)
        assert np.all(np.diff(a.lambdas) >= 0)
        assert a.lambdas[-1] >= a.lambdas[0]

    def test_norm_const(self):
        b = build_basis(DomainSpec(J=1))
        assert b.norm_const == pytest.approx(2.0 / math.pi)


class TestQuadrature:
    def test_sin_squared(self):
        qx, _ = quadrature_grid(DomainSpec(J=3, Nquad=16))
        val = qx.trapezoid_weights @ np.sin(qx.nodes) ** 2
        assert val == pytest.approx(math.pi / 2, abs=1e-13)

    def test_triple_product_even(self):
        qx, _ = quadrature_grid(DomainSpec(J=3, Nquad=16))
        integrand = np.sin(qx.nodes) * np.cos(qx.nodes) * np.sin(2 * qx.nodes)
        val = qx.trapezoid_weights @ integrand
        assert val == pytest.approx(math.pi / 4, abs=1e-13)

    def test_odd_sine_cube_class(self):
        # sin(3x) = 3 sin x - 4 sin^3 x lives in the odd triple-product class
        qx, _ = quadrature_grid(DomainSpec(J=3, Nquad=16))
        val = qx.sine_weights @ np.sin(3 * qx.nodes)
        assert val == pytest.approx(2.0 / 3.0, abs=1e-13)

    def test_sine_weights_exact_through_degree_nquad(self):
        d = DomainSpec(J=2, Nquad=10)
        qx, _ = quadrature_grid(d)
        for n in range(1, 11):
            exact = d.Lx * (1 - (-1.0) ** n) / (n * math.pi)
            assert qx.sine_weights @ np.sin(n * qx.nodes) == pytest.approx(exact, abs=1e-13)

    def test_nodes_interior_and_uniform(self):
        d = DomainSpec(J=2, Nquad=8)
        qx, qy = quadrature_grid(d)
        assert qx.nodes.size == 8
        assert qx.nodes[0] == pytest.approx(d.Lx / 9)
        assert np.allclose(np.diff(qx.nodes), qx.h)
        assert qy.length == d.Ly


class TestSynthesize:
    def test_zero_coeffs(self, basis_j2):
        g = synthesize(SpectralField(np.zeros(4), basis_j2))
        assert not g.values.any()

    def test_first_mode_closed_form(self, basis_j2):
        g = synthesize(unit_field(basis_j2, 1, 1))
        X, Y = np.meshgrid(basis_j2.quad_x.nodes, basis_j2.quad_y.nodes, indexing="ij")
        expected = (2.0 / math.pi) * np.sin(X) * np.sin(Y)
        assert np.max(np.abs(g.values - expected)) < 1e-14

    def test_matches_naive_double_sum(self, basis_j4):
        f = random_field_on(basis_j4, seed=42)
        g = synthesize(f)
        X, Y = np.meshgrid(basis_j4.quad_x.nodes, basis_j4.quad_y.nodes, indexing="ij")
        naive = np.zeros_like(X)
        nc = basis_j4.norm_const
        for c, (j, k) in zip(f.coeffs, basis_j4.modes):
            naive += c * nc * np.sin(j * X) * np.sin(k * Y)
        assert np.max(np.abs(g.values - naive)) < 1e-12

    def test_derivative_matches_naive(self, basis_j4):
        f = random_field_on(basis_j4, seed=7)
        g = synthesize_derivative(f, dx=1, dy=0)
        X, Y = np.meshgrid(basis_j4.quad_x.nodes, basis_j4.quad_y.nodes, indexing="ij")
        naive = np.zeros_like(X)
        nc = basis_j4.norm_const
        for c, (j, k) in zip(f.coeffs, basis_j4.modes):
            naive += c * nc * j * np.cos(j * X) * np.sin(k * Y)
        assert np.max(np.abs(g.values - naive)) < 1e-12


class TestAnalyze:
    def test_recovers_third_mode(self, basis_j4):
        e3 = SpectralField(np.eye(basis_j4.size)[2], basis_j4)
        got = analyze(synthesize(e3), basis_j4)
        assert np.max(np.abs(got.coeffs - e3.coeffs)) < 1e-12

    def test_zero_grid(self, basis_j4):
        n = basis_j4.domain.Nquad
        got = analyze(GridField(np.zeros((n, n)), basis_j4.domain), basis_j4)
        assert not got.coeffs.any()

    def test_round_trip_j8(self):
        b = build_basis(DomainSpec(J=8))
        f = random_field_on(b, seed=3, decay=0.0)
        back = analyze(synthesize(f), b)
        assert np.max(np.abs(back.coeffs - f.coeffs)) < 1e-12

    def test_domain_mismatch_rejected(self, basis_j2, basis_j4):
        g = synthesize(unit_field(basis_j4, 1, 1))
        with pytest.raises(ShapeMismatchError):
            analyze(g, basis_j2)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), j=st.sampled_from([2, 4]))
def test_round_trip_property(seed, j):
    b = build_basis(DomainSpec(J=j))
    f = SpectralField(np.random.default_rng(seed).standard_normal(b.size), b)
    back = analyze(synthesize(f), b)
    scale = max(np.max(np.abs(f.coeffs)), 1e-300)
    assert np.max(np.abs(back.coeffs - f.coeffs)) <= 1e-12 * scale


@pytest.mark.parametrize("j", [4, 16])
def test_gram_matrix_is_identity(j):
    b = build_basis(DomainSpec(J=j))
    eye = np.eye(b.size)
    for i in range(b.size):
        row = analyze(synthesize(SpectralField(eye[i], b)), b).coeffs
        assert np.max(np.abs(row - eye[i])) < 1e-12


def test_each_mode_has_unit_l2_norm(basis_j4):
    for i in range(basis_j4.size):
        e = SpectralField(np.eye(basis_j4.size)[i], basis_j4)
        g = synthesize(e)
        sq = GridField(g.values ** 2, basis_j4.domain)
        assert integrate(sq, basis_j4) == pytest.approx(1.0, abs=1e-12)


def test_grid_lp_norm_against_closed_form(basis_j2):
    # ||w11||_{L4}^4 = (2/pi)^4 * (3pi/8)^2 on the unit-pi square
    g = synthesize(unit_field(basis_j2, 1, 1))
    expected = ((2 / math.pi) ** 4 * (3 * math.pi / 8) ** 2) ** 0.25
    assert grid_lp_norm(g, basis_j2, 4.0) == pytest.approx(expected, abs=1e-12)


def test_evaluate_modes_agrees_with_synthesize(basis_j4):
    f = random_field_on(basis_j4, seed=12)
    direct = evaluate_modes(f, basis_j4.quad_x.nodes, basis_j4.quad_y.nodes)
    assert np.max(np.abs(direct - synthesize(f).values)) < 1e-13


def test_field_validation():
    b = build_basis(DomainSpec(J=2))
    with pytest.raises(ShapeMismatchError):
        SpectralField(np.zeros(3), b)
    with pytest.raises(ShapeMismatchError):
        SpectralField(np.array([1.0, np.nan, 0.0, 0.0]), b)
    with pytest.raises(ShapeMismatchError):
        GridField(np.zeros((3, 3)), b.domain)

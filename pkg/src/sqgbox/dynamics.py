"""Constitutive velocity law, Galerkin nonlinearity, and right-hand side.

The velocity is reconstructed from the scalar through the stream
function: psi solves Lambda psi = theta, and u = (-d_y psi, d_x psi).
Since psi vanishes on the boundary, u is automatically divergence-free
and tangent to the walls.

Two independent evaluations of the projected advection term are kept on
purpose.  The pseudo-spectral path (grid product, then projection) is
the production path at O(m * N^2); the dense interaction-tensor
contraction at O(m^3) is its correctness oracle.  The scalar gradient
and the velocity are differentiated analytically mode by mode; only the
final product is projected back onto the basis, the velocity itself is
never truncated beforehand.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import EigenBasis, GridField, SpectralField, analyze, synthesize_derivative
from .errors import ConfigurationError, ShapeMismatchError
from .spectral import frac_laplacian

GAMMA_SIZE_GUARD = 8  # J above this needs an explicit opt-in (O(J^6) storage)


@dataclass
class VelocityField:
    """Velocity components on the grid plus the stream function."""

    u1: GridField
    u2: GridField
    psi: SpectralField


@dataclass
class GammaTensor:
    """Dense quadratic interaction coefficients gamma[j, k, l].

    Antisymmetric in (k, l); stored dense, the symmetry is checked after
    construction rather than exploited for storage.
    """

    values: np.ndarray
    basis: EigenBasis


def velocity(theta: SpectralField) -> VelocityField:
    """u = grad-perp of the stream function Lambda^{-1} theta."""
    psi = frac_laplacian(theta, -1.0)
    u1 = synthesize_derivative(psi, dx=0, dy=1)
    u1 = GridField(-u1.values, u1.domain)
    u2 = synthesize_derivative(psi, dx=1, dy=0)
    return VelocityField(u1, u2, psi)


def nonlinear_term(theta: SpectralField) -> SpectralField:
    """Projection of u . grad(theta) onto the basis (pseudo-spectral path).

    The grid product has per-axis trigonometric degree at most 3J once
    multiplied against a basis function, which the quadrature integrates
    exactly for Nquad >= 2J + 2, so the projection is alias-free.
    """
    vel = velocity(theta)
    tx = synthesize_derivative(theta, dx=1, dy=0)
    ty = synthesize_derivative(theta, dx=0, dy=1)
    product = GridField(vel.u1.values * tx.values + vel.u2.values * ty.values,
                        theta.basis.domain)
    return analyze(product, theta.basis)


def gamma_tensor(basis: EigenBasis, allow_large: bool = False) -> GammaTensor:
    """Quadrature of lambda_j^{-1/2} * (grad-perp w_j . grad w_k) against w_l.

    Dense O(m^3) result; guarded at J <= 8 unless *allow_large*.  Raises if
    the constructed tensor is not antisymmetric in (k, l) at round-off
    level, which would indicate a quadrature exactness bug.
    """
    if basis.domain.J > GAMMA_SIZE_GUARD and not allow_large:
        raise ConfigurationError(
            f"J={basis.domain.J} exceeds the interaction-tensor guard "
            f"{GAMMA_SIZE_GUARD}; pass allow_large=True to override")
    m = basis.size
    gx = np.empty((m,) + (basis.domain.Nquad,) * 2)
    gy = np.empty_like(gx)
    for idx in range(m):
        e = np.zeros(m)
        e[idx] = 1.0
        mode = SpectralField(e, basis)
        gx[idx] = synthesize_derivative(mode, dx=1, dy=0).values
        gy[idx] = synthesize_derivative(mode, dx=0, dy=1).values

    gamma = np.empty((m, m, m))
    inv_sqrt_lam = basis.lambdas ** -0.5
    for j in range(m):
        for k in range(m):
            integrand = -gy[j] * gx[k] + gx[j] * gy[k]
            coeffs = analyze(GridField(integrand, basis.domain), basis).coeffs
            gamma[j, k, :] = inv_sqrt_lam[j] * coeffs

    skew = np.max(np.abs(gamma + gamma.transpose(0, 2, 1)))
    scale = max(np.max(np.abs(gamma)), 1.0)
    if skew > 1e-12 * scale:
        raise RuntimeError(
            f"interaction tensor lost antisymmetry in (k, l): defect {skew:.3e}")
    return GammaTensor(gamma, basis)


def nonlinear_via_gamma(theta: SpectralField, gamma: GammaTensor) -> SpectralField:
    """Coefficient-space contraction sum_{j,k} gamma[j,k,l] theta_j theta_k."""
    if gamma.basis.modes != theta.basis.modes:
        raise ShapeMismatchError("interaction tensor built for a different basis")
    out = np.einsum("jkl,j,k->l", gamma.values, theta.coeffs, theta.coeffs)
    return SpectralField(out, theta.basis)


def rhs(theta: SpectralField, cfg) -> SpectralField:
    """Right-hand side -P(u . grad theta) - kappa * Lambda^{2 alpha} theta.

    *cfg* needs attributes ``kappa``, ``alpha``, ``include_advection``, and
    ``nonlinear_path``; a gamma tensor is required when the tensor path is
    selected (attach it as ``cfg.gamma``).
    """
    out = np.zeros_like(theta.coeffs)
    if cfg.include_advection:
        if getattr(cfg, "nonlinear_path", "pseudo") == "gamma":
            adv = nonlinear_via_gamma(theta, cfg.gamma)
        else:
            adv = nonlinear_term(theta)
        out -= adv.coeffs
    if cfg.kappa > 0:
        out -= cfg.kappa * frac_laplacian(theta, 2.0 * cfg.alpha).coeffs
    return SpectralField(out, theta.basis)

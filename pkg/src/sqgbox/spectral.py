"""Spectral functional calculus: fractional powers, norms, projections.

All operations act diagonally on eigen-coefficients and never touch the
grid; grid-based cross checks live in :mod:`sqgbox.checks`.
"""

from __future__ import annotations

import numpy as np

from .basis import SpectralField
from .errors import DomainError, ShapeMismatchError


def frac_laplacian(f: SpectralField, s: float) -> SpectralField:
    """Apply the spectral power with multiplier lambda_m ** (s/2).

    ``s = 2`` is the (negative) Dirichlet Laplacian, ``s = -1`` the inverse
    square root used by the velocity law.  Powers below -1 are rejected to
    avoid silent misuse; the Dirichlet spectrum is strictly positive so the
    allowed negative power is well defined.
    """
    if s < -1:
        raise DomainError(f"fractional power s={s} below the supported minimum -1")
    return SpectralField(f.coeffs * f.basis.lambdas ** (s / 2.0), f.basis)


def sobolev_norm(f: SpectralField, s: float) -> float:
    """(sum lambda_m^s f_m^2)^(1/2); s = 0 is the plain L2 norm."""
    if s < 0:
        raise DomainError(f"norm order s={s} must be nonnegative")
    if s == 0:
        return float(np.linalg.norm(f.coeffs))
    return float(np.sqrt(np.sum(f.basis.lambdas ** s * f.coeffs ** 2)))


def interpolation_slack(f: SpectralField, alpha1: float, alpha2: float,
                        mu: float) -> float:
    """Slack of the two-exponent norm interpolation bound.

    Returns ||f||_a1^mu * ||f||_a2^(1-mu) - ||f||_{mu*a1+(1-mu)*a2}, which
    is nonnegative up to round-off (Hoelder with exponents 1/mu, 1/(1-mu)).
    """
    if alpha1 < 0 or alpha2 < 0:
        raise DomainError("interpolation exponents must be nonnegative")
    if not 0.0 <= mu <= 1.0:
        raise DomainError(f"mu={mu} outside [0, 1]")
    if not np.any(f.coeffs):
        raise DomainError("interpolation slack undefined for the zero field")
    mid = mu * alpha1 + (1.0 - mu) * alpha2
    return (sobolev_norm(f, alpha1) ** mu * sobolev_norm(f, alpha2) ** (1.0 - mu)
            - sobolev_norm(f, mid))


def truncate(f: SpectralField, j_max: int) -> SpectralField:
    """Zero every coefficient with mode index outside {1..j_max}^2.

    Idempotent and self-adjoint with respect to the coefficient dot
    product; commutes with ``frac_laplacian`` since both are diagonal.
    """
    J = f.basis.domain.J
    if j_max > J:
        raise DomainError(f"truncation level {j_max} exceeds basis J={J}")
    if j_max < 1:
        raise DomainError(f"truncation level must be >= 1, got {j_max}")
    keep = (f.basis._js <= j_max) & (f.basis._ks <= j_max)
    return SpectralField(np.where(keep, f.coeffs, 0.0), f.basis)


def dot(f: SpectralField, g: SpectralField) -> float:
    """L2 pairing of two fields over the same basis."""
    if f.basis is not g.basis and f.basis.modes != g.basis.modes:
        raise ShapeMismatchError("fields live on different bases")
    return float(f.coeffs @ g.coeffs)

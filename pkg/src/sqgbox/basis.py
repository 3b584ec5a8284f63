"""Dirichlet sine eigenbasis on a rectangle and exact grid transforms.

The eigenfunctions of the Dirichlet Laplacian on (0, Lx) x (0, Ly) are

    w[j,k](x, y) = (2 / sqrt(Lx*Ly)) * sin(j*pi*x/Lx) * sin(k*pi*y/Ly)

with eigenvalues lam[j,k] = (j*pi/Lx)**2 + (k*pi/Ly)**2.  A basis keeps
the J*J modes with j, k in 1..J, sorted by increasing eigenvalue with
lexicographic (j, k) tie-break, so coefficient vectors are reproducible
bit for bit.

Quadrature rule (normative for every integral this package computes)
---------------------------------------------------------------------
Per axis the grid consists of the Nquad interior nodes

    x_i = i * L / (Nquad + 1),   i = 1..Nquad,

and two weight vectors:

* ``trapezoid_weights`` -- the composite trapezoid rule on the closed
  interval restricted to the interior nodes (uniform weight h).  For an
  integrand vanishing at the endpoints whose even periodic extension is
  a cosine polynomial, the rule is exact through trigonometric degree
  2*Nquad + 1.  Every product of two or three basis factors that the
  transforms, nonlinear projection, and interaction tensor integrate is
  of this kind, so Nquad >= 2J + 2 keeps all of them alias-free
  (degree <= 3J).
* ``sine_weights`` -- moment-matched weights, exact for every sine
  polynomial sum(b_n sin(n*pi*x/L)) with n <= Nquad.  Integrands with
  an odd number of sine factors per axis fall in this class; triple
  products need Nquad >= 3J here.

No single weight vector on this grid can be exact for both parity
classes (the sine constraints already determine the weights uniquely),
hence the pair.  Callers pick the vector matching the known extension
parity of their integrand; ``integrate`` defaults to the trapezoid
rule, which covers the whole transform pipeline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ShapeMismatchError


@dataclass(frozen=True)
class DomainSpec:
    """Rectangle (0, Lx) x (0, Ly) with truncation J and grid size Nquad.

    Nquad counts interior quadrature nodes per axis; ``None`` resolves to
    the minimal admissible value 2J + 2.
    """

    Lx: float = math.pi
    Ly: float = math.pi
    J: int = 8
    Nquad: int | None = None

    def __post_init__(self):
        if self.Nquad is None:
            object.__setattr__(self, "Nquad", 2 * self.J + 2)
        if not (self.Lx > 0 and self.Ly > 0):
            raise ConfigurationError(
                f"side lengths must be positive, got Lx={self.Lx}, Ly={self.Ly}")
        if self.J < 1:
            raise ConfigurationError(f"J must be >= 1, got J={self.J}")
        if self.Nquad < 2 * self.J + 2:
            raise ConfigurationError(
                f"Nquad={self.Nquad} below exactness threshold 2J+2={2 * self.J + 2}")


@dataclass(frozen=True)
class Quadrature1D:
    """Interior nodes of one axis with the two exactness-class weight vectors."""

    nodes: np.ndarray
    trapezoid_weights: np.ndarray
    sine_weights: np.ndarray
    length: float

    @property
    def h(self) -> float:
        return self.length / (self.nodes.size + 1)


def _axis_quadrature(length: float, nquad: int) -> Quadrature1D:
    h = length / (nquad + 1)
    nodes = h * np.arange(1, nquad + 1)
    trap = np.full(nquad, h)
    # Moments of sin(n pi x / L): L*(1-(-1)^n)/(n pi).  Inverting the DST-I
    # relation gives weights exact on the sine class up to degree Nquad.
    n = np.arange(1, nquad + 1)
    moments = length * (1.0 - (-1.0) ** n) / (n * np.pi)
    sine_w = (2.0 / (nquad + 1)) * (moments @ np.sin(np.outer(n, np.pi * nodes / length)))
    return Quadrature1D(nodes, trap, sine_w, length)


def quadrature_grid(domain: DomainSpec) -> tuple[Quadrature1D, Quadrature1D]:
    """Node/weight sets for the x and y axes of *domain*."""
    return (_axis_quadrature(domain.Lx, domain.Nquad),
            _axis_quadrature(domain.Ly, domain.Nquad))


class EigenBasis:
    """Ordered Dirichlet eigenpairs of the rectangle plus transform tables.

    Immutable after construction; safe to share across threads.
    """

    def __init__(self, domain: DomainSpec):
        self.domain = domain
        J = domain.J
        pairs = [(j, k) for j in range(1, J + 1) for k in range(1, J + 1)]
        lam = {(j, k): (j * np.pi / domain.Lx) ** 2 + (k * np.pi / domain.Ly) ** 2
               for (j, k) in pairs}
        pairs.sort(key=lambda jk: (lam[jk], jk))
        self.modes: tuple[tuple[int, int], ...] = tuple(pairs)
        self.lambdas = np.array([lam[jk] for jk in pairs])
        self.norm_const = 2.0 / math.sqrt(domain.Lx * domain.Ly)

        self.quad_x, self.quad_y = quadrature_grid(domain)
        self._js = np.array([j for (j, _) in pairs])
        self._ks = np.array([k for (_, k) in pairs])
        self._mode_of_box = {jk: m for m, jk in enumerate(pairs)}
        # per-axis synthesis tables, indexed [j-1, node]; derivative orders cached
        self._tables: dict[tuple[str, int], np.ndarray] = {}

    @property
    def size(self) -> int:
        return len(self.modes)

    def mode_index(self, j: int, k: int) -> int:
        return self._mode_of_box[(j, k)]

    def _axis_table(self, axis: str, order: int) -> np.ndarray:
        key = (axis, order)
        if key not in self._tables:
            length = self.domain.Lx if axis == "x" else self.domain.Ly
            quad = self.quad_x if axis == "x" else self.quad_y
            J = self.domain.J
            freq = np.arange(1, J + 1) * np.pi / length
            phase = np.outer(freq, quad.nodes)
            scale = math.sqrt(2.0 / length)
            if order == 0:
                tab = scale * np.sin(phase)
            elif order == 1:
                tab = scale * freq[:, None] * np.cos(phase)
            elif order == 2:
                tab = -scale * freq[:, None] ** 2 * np.sin(phase)
            else:
                raise ValueError(f"derivative order {order} not supported")
            self._tables[key] = tab
        return self._tables[key]

    def _coeff_box(self, coeffs: np.ndarray) -> np.ndarray:
        J = self.domain.J
        box = np.zeros((J, J))
        box[self._js - 1, self._ks - 1] = coeffs
        return box

    def _box_to_coeffs(self, box: np.ndarray) -> np.ndarray:
        return box[self._js - 1, self._ks - 1]


def build_basis(domain: DomainSpec) -> EigenBasis:
    """Construct the J^2 eigenpairs of *domain*, sorted and deterministic."""
    return EigenBasis(domain)


@dataclass
class SpectralField:
    """Real coefficient vector aligned with ``basis.modes``."""

    coeffs: np.ndarray
    basis: EigenBasis

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (self.basis.size,):
            raise ShapeMismatchError(
                f"coefficient vector of length {self.coeffs.size} does not match "
                f"basis of size {self.basis.size}")
        if not np.all(np.isfinite(self.coeffs)):
            raise ShapeMismatchError("non-finite coefficients")


@dataclass
class GridField:
    """Values on the Nquad x Nquad interior quadrature nodes."""

    values: np.ndarray
    domain: DomainSpec

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        n = self.domain.Nquad
        if self.values.shape != (n, n):
            raise ShapeMismatchError(
                f"grid of shape {self.values.shape} does not match Nquad={n}")
        if not np.all(np.isfinite(self.values)):
            raise ShapeMismatchError("non-finite grid values")


def unit_field(basis: EigenBasis, j: int, k: int, amplitude: float = 1.0) -> SpectralField:
    """Single-mode field amplitude * w[j,k]."""
    c = np.zeros(basis.size)
    c[basis.mode_index(j, k)] = amplitude
    return SpectralField(c, basis)


def synthesize(f: SpectralField) -> GridField:
    """Evaluate sum_m f_m w_m at the quadrature nodes."""
    b = f.basis
    box = b._coeff_box(f.coeffs)
    values = b._axis_table("x", 0).T @ box @ b._axis_table("y", 0)
    return GridField(values, b.domain)


def synthesize_derivative(f: SpectralField, dx: int = 0, dy: int = 0) -> GridField:
    """Evaluate d^dx/dx^dx d^dy/dy^dy of the field, mode by mode.

    Differentiation is analytic per mode (sine -> cosine and back), never
    a finite difference, so boundary behavior stays exact.
    """
    b = f.basis
    box = b._coeff_box(f.coeffs)
    values = b._axis_table("x", dx).T @ box @ b._axis_table("y", dy)
    return GridField(values, b.domain)


def analyze(g: GridField, basis: EigenBasis) -> SpectralField:
    """Coefficients int g * w_m dx dy via the trapezoid tensor rule.

    Exact inverse of ``synthesize`` on band-limited fields.
    """
    if g.domain != basis.domain:
        raise ShapeMismatchError("grid domain does not match basis domain")
    wx = basis.quad_x.trapezoid_weights
    wy = basis.quad_y.trapezoid_weights
    weighted = g.values * wx[:, None] * wy[None, :]
    box = basis._axis_table("x", 0) @ weighted @ basis._axis_table("y", 0).T
    return SpectralField(basis._box_to_coeffs(box), basis)


def integrate(g: GridField, basis: EigenBasis) -> float:
    """Integral of g over the rectangle (trapezoid tensor rule)."""
    if g.domain != basis.domain:
        raise ShapeMismatchError("grid domain does not match basis domain")
    wx = basis.quad_x.trapezoid_weights
    wy = basis.quad_y.trapezoid_weights
    return float(wx @ g.values @ wy)


def grid_lp_norm(g: GridField, basis: EigenBasis, p: float) -> float:
    """L^p norm of the grid values under the trapezoid tensor rule."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    wx = basis.quad_x.trapezoid_weights
    wy = basis.quad_y.trapezoid_weights
    return float((wx @ np.abs(g.values) ** p @ wy) ** (1.0 / p))


def evaluate_modes(f: SpectralField, xs: np.ndarray, ys: np.ndarray,
                   dx: int = 0, dy: int = 0) -> np.ndarray:
    """Evaluate (a derivative of) the field on an arbitrary tensor grid xs x ys.

    Used for boundary traces and endpoint-inclusive quadrature oracles;
    the regular transforms use the cached node tables instead.
    """
    b = f.basis
    box = b._coeff_box(f.coeffs)
    out = np.asarray(box)
    mats = []
    for axis, pts, order in (("x", xs, dx), ("y", ys, dy)):
        length = b.domain.Lx if axis == "x" else b.domain.Ly
        freq = np.arange(1, b.domain.J + 1) * np.pi / length
        phase = np.outer(freq, np.asarray(pts, dtype=float))
        scale = math.sqrt(2.0 / length)
        if order == 0:
            mats.append(scale * np.sin(phase))
        elif order == 1:
            mats.append(scale * freq[:, None] * np.cos(phase))
        elif order == 2:
            mats.append(-scale * freq[:, None] ** 2 * np.sin(phase))
        else:
            raise ValueError(f"derivative order {order} not supported")
    return mats[0].T @ out @ mats[1]

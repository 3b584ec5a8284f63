"""Walk through the sine eigenbasis: eigenvalues, transforms, quadrature.

The Dirichlet Laplacian on the pi-square has eigenfunctions
(2/pi) sin(jx) sin(ky) with eigenvalues j^2 + k^2.  Everything downstream
rests on two facts demonstrated here: the grid transforms invert each
other to round-off on band-limited fields, and the quadrature integrates
the products the solver needs exactly.
"""

import numpy as np

from sqgbox import DomainSpec, SpectralField, analyze, build_basis, \
    quadrature_grid, synthesize

domain = DomainSpec(J=4)
basis = build_basis(domain)

print("First 8 modes (j, k) with eigenvalues:")
for (j, k), lam in list(zip(basis.modes, basis.lambdas))[:8]:
    print(f"  ({j},{k})  lambda = {lam:.1f}")
print("Note the tie at lambda = 5: (1,2) sorts before (2,1).\n")

rng = np.random.default_rng(0)
f = SpectralField(rng.standard_normal(basis.size), basis)
g = synthesize(f)
back = analyze(g, basis)
print(f"Round trip: analyze(synthesize(f)) deviates from f by "
      f"{np.max(np.abs(back.coeffs - f.coeffs)):.2e}\n")

qx, _ = quadrature_grid(domain)
print("Quadrature on (0, pi), Nquad =", domain.Nquad)
print(f"  trapezoid weights:  int sin^2 x dx        = "
      f"{qx.trapezoid_weights @ np.sin(qx.nodes) ** 2:.15f}  (pi/2 = {np.pi / 2:.15f})")
print(f"  trapezoid weights:  int sinx cosx sin2x   = "
      f"{qx.trapezoid_weights @ (np.sin(qx.nodes) * np.cos(qx.nodes) * np.sin(2 * qx.nodes)):.15f}"
      f"  (pi/4 = {np.pi / 4:.15f})")
print(f"  sine weights:       int sin 3x dx         = "
      f"{qx.sine_weights @ np.sin(3 * qx.nodes):.15f}  (2/3)")
print("\nEven-extension products use the trapezoid weights; odd sine-class")
print("integrands (like sin 3x = 3 sin x - 4 sin^3 x) use the sine weights.")

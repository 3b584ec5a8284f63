"""The constitutive velocity law and the two faces of the nonlinearity.

The scalar drives its own transport: u = grad-perp of the stream
function solving Lambda psi = theta.  Because psi vanishes on the walls,
u is divergence-free and tangent to the boundary, and the projected
advection term is energy-neutral.  The pseudo-spectral evaluation and
the dense interaction-tensor contraction agree to round-off; the tensor
is the oracle, the grid path is production.
"""

import numpy as np

from sqgbox import DomainSpec, SpectralField, build_basis, check_velocity, \
    gamma_tensor, nonlinear_term, nonlinear_via_gamma, unit_field, velocity

basis = build_basis(DomainSpec(J=3))
rng = np.random.default_rng(2)
theta = SpectralField(rng.standard_normal(basis.size) * basis.lambdas ** -0.5, basis)

vel = velocity(theta)
report = check_velocity(vel)
print("Velocity admissibility:")
print(f"  worst divergence      = {report.metadata['worst_divergence']:.2e}")
print(f"  worst boundary trace  = {report.metadata['worst_boundary_trace']:.2e}\n")

gamma = gamma_tensor(basis)
g = gamma.values
print("Interaction tensor (m = 9 modes):")
print(f"  antisymmetry defect |gamma[j,k,l] + gamma[j,l,k]| <= "
      f"{np.max(np.abs(g + g.transpose(0, 2, 1))):.2e}")
print(f"  self-advection      |gamma[j,j,l]|               <= "
      f"{np.max(np.abs(np.einsum('jjl->jl', g))):.2e}\n")

a = nonlinear_term(theta)
b = nonlinear_via_gamma(theta, gamma)
print(f"Pseudo-spectral vs tensor contraction: max difference "
      f"{np.max(np.abs(a.coeffs - b.coeffs)):.2e}")
print(f"Energy neutrality <theta, P(u.grad theta)> = "
      f"{theta.coeffs @ a.coeffs:.2e}\n")

single = nonlinear_term(unit_field(basis, 1, 1, 5.0))
print(f"A single mode transports itself nowhere: |P(u.grad theta)| = "
      f"{np.max(np.abs(single.coeffs)):.2e}")

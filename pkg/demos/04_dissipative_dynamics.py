"""Time integration: exact dissipative factors, conservation, energy law.

Three regimes in one script: a pure-diffusion single mode tracks its
closed-form decay, an inviscid run conserves L2 to integrator order, and
a dissipative run satisfies the discrete energy identity with a residual
that shrinks at second order under step halving.
"""

import numpy as np

from sqgbox import DomainSpec, SolverConfig, SpectralField, build_basis, \
    energy_balance, run, sobolev_norm, unit_field

basis = build_basis(DomainSpec(J=4))

cfg = SolverConfig(J=2, kappa=1.0, alpha=0.5, dt=1e-3, T=1.0,
                   include_advection=False, snapshot_stride=250).validate()
b2 = build_basis(DomainSpec(J=2))
_traj, rows = run(unit_field(b2, 1, 1), cfg)
print("Pure diffusion, single mode, kappa=1, alpha=1/2:")
for row in rows:
    print(f"  t={row.t:5.2f}  L2={row.L2:.12f}  exact={np.exp(-np.sqrt(2) * row.t):.12f}")

rng = np.random.default_rng(3)
theta = SpectralField(rng.standard_normal(16) * basis.lambdas ** -1.0, basis)
cfg0 = SolverConfig(J=4, kappa=0.0, dt=1e-3, T=1.0, scheme="rk4_fully_explicit",
                    snapshot_stride=100).validate()
_traj, rows = run(SpectralField(40.0 * theta.coeffs, basis), cfg0)
drift = max(abs(r.L2 - rows[0].L2) for r in rows) / rows[0].L2
print(f"\nInviscid rk4 over T=1: relative L2 drift = {drift:.2e}")

theta2 = SpectralField(theta.coeffs / sobolev_norm(SpectralField(theta.coeffs, basis), 2.0)
                       * 2.0, basis)
rows_pair = []
for dt in (2e-2, 1e-2):
    cfg1 = SolverConfig(J=4, kappa=1.0, alpha=0.5, dt=dt, T=0.5,
                        snapshot_stride=1).validate()
    _t, r = run(theta2, cfg1)
    rows_pair.append(r)
report = energy_balance(rows_pair[0], 1.0, rows_refined=rows_pair[1], tolerance=1.0)
print(f"Energy identity residual: {report.metadata['max_residual']:.3e} at dt=2e-2, "
      f"{report.metadata['max_residual_refined']:.3e} at dt=1e-2 "
      f"(order {report.metadata['order']:.2f})")

"""The two constructive existence schemes at desk scale.

Retarded mollification replaces the self-advection velocity by a
time-lagged average of the solution's own history, making each lag
window a linear problem; the lag sweep converges back to the direct
run.  The viscosity-regularized fixed point solves a linear transport
problem per iterate, with the velocity frozen from the previous one,
and contracts geometrically for small data.
"""

import numpy as np

from sqgbox import DomainSpec, SolverConfig, SpectralField, build_basis, run, \
    run_picard_inviscid, run_retarded_mollification, sobolev_norm, unit_field

basis = build_basis(DomainSpec(J=4))
coeffs = np.zeros(basis.size)
coeffs[basis.mode_index(1, 1)] = 1.0
coeffs[basis.mode_index(2, 1)] = 1.0
theta0 = SpectralField(coeffs, basis)
theta0 = SpectralField(theta0.coeffs * 3.0 / sobolev_norm(theta0, 2.0), basis)

cfg = SolverConfig(J=4, alpha=0.5, kappa=0.5, dt=1e-3, T=2.0,
                   snapshot_stride=25).validate()
direct, _ = run(theta0, cfg)


def sup_dist(a, b):
    return max(np.linalg.norm(x.coeffs - y.coeffs)
               for x, y in zip(a.snapshots, b.snapshots))


print("Retarded mollification, lag sweep:")
trajs = {}
for delta in (0.2, 0.1, 0.05):
    trajs[delta], _ = run_retarded_mollification(theta0, delta, cfg)
    print(f"  delta={delta:<5} sup-t L2 distance to direct run: "
          f"{sup_dist(trajs[delta], direct):.3e}")
print(f"  successive differences: "
      f"{sup_dist(trajs[0.2], trajs[0.1]):.3e} -> "
      f"{sup_dist(trajs[0.1], trajs[0.05]):.3e}\n")

cfg_p = SolverConfig(J=4, kappa=0.0, dt=1e-3, T=0.1, snapshot_stride=20).validate()
small = SpectralField(theta0.coeffs * 0.1 / 3.0, basis)
result = run_picard_inviscid(small, kappa_visc=0.05, tol=1e-10, max_iter=25, cfg=cfg_p)
print("Fixed-point iteration with viscosity 0.05 on small data:")
for n, (res, proxy) in enumerate(zip(result.residuals, result.w2p_proxies[1:]), 1):
    print(f"  iterate {n}: sup-t L2 residual {res:.3e}, curvature proxy {proxy:.3e}")
print(f"  converged: {result.converged} in {result.iterations} iteration(s)\n")

single = run_picard_inviscid(unit_field(basis, 1, 1, 0.3), 0.05, 1e-8, 25, cfg_p)
print(f"Single-mode data is already a fixed point: "
      f"{single.iterations} iteration(s), residual {single.residuals[0]:.1e}")

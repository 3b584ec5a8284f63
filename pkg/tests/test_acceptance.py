"""Acceptance battery: every criterion prints one pass/fail line.

Run with ``pytest tests/test_acceptance.py -v -s``.  Desk scale
throughout (J <= 8, Nquad <= 64, each criterion well under a minute).
"""

import math

import numpy as np

from sqgbox.basis import DomainSpec, SpectralField, analyze, build_basis, \
    synthesize, unit_field
from sqgbox.checks import commutator_diagnostic, cordoba_report, energy_residuals
from sqgbox.config import SolverConfig, resolve_config
from sqgbox.dynamics import gamma_tensor, nonlinear_term, nonlinear_via_gamma
from sqgbox.errors import BlowUpError
from sqgbox.experiments import basis_for, random_field, run_experiment
from sqgbox.spectral import sobolev_norm
from sqgbox.stepping import run, run_picard_inviscid, run_retarded_mollification, \
    smallness_margin


def _report(criterion, ok, detail):
    print(f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}")
    assert ok, f"{criterion}: {detail}"


def _normalized(field, order, value):
    return SpectralField(field.coeffs * value / sobolev_norm(field, order),
                         field.basis)


def test_criterion_01_spectral_round_trip():
    worst = 0.0
    for J in (2, 4, 8):
        basis = build_basis(DomainSpec(J=J))
        rng = np.random.default_rng(J)
        for _ in range(100):
            f = SpectralField(rng.standard_normal(basis.size), basis)
            back = analyze(synthesize(f), basis)
            worst = max(worst, float(np.max(np.abs(back.coeffs - f.coeffs))))
    _report("1 spectral round trip",
            worst <= 1e-12,
            f"max deviation {worst:.3e} over 300 fields, J in {{2,4,8}} (tol 1e-12)")


def test_criterion_02_galerkin_structure():
    worst_skew = worst_diag = worst_path = 0.0
    for J in (2, 3, 4):
        basis = build_basis(DomainSpec(J=J))
        g = gamma_tensor(basis)
        worst_skew = max(worst_skew,
                         float(np.max(np.abs(g.values + g.values.transpose(0, 2, 1)))))
        worst_diag = max(worst_diag,
                         float(np.max(np.abs(np.einsum("jjl->jl", g.values)))))
        rng = np.random.default_rng(100 + J)
        for _ in range(5):
            theta = SpectralField(rng.standard_normal(basis.size), basis)
            a = nonlinear_term(theta).coeffs
            b = nonlinear_via_gamma(theta, g).coeffs
            worst_path = max(worst_path, float(np.max(np.abs(a - b))))
    ok = worst_skew <= 1e-12 and worst_diag <= 1e-13 and worst_path <= 1e-10
    _report("2 Galerkin interaction structure", ok,
            f"antisymmetry {worst_skew:.3e} (tol 1e-12), "
            f"self-interaction {worst_diag:.3e} (tol 1e-13), "
            f"path mismatch {worst_path:.3e} (tol 1e-10)")


def test_criterion_03_inviscid_conservation():
    basis = build_basis(DomainSpec(J=4))
    rng = np.random.default_rng(3)
    theta = SpectralField(40.0 * rng.standard_normal(16) * basis.lambdas ** -1.0,
                          basis)
    drifts = []
    for dt in (1e-3, 5e-4):
        cfg = SolverConfig(J=4, kappa=0.0, dt=dt, T=1.0,
                           scheme="rk4_fully_explicit",
                           snapshot_stride=int(0.1 / dt)).validate()
        _traj, rows = run(theta, cfg)
        drifts.append(max(abs(r.L2 - rows[0].L2) for r in rows) / rows[0].L2)
    ratio = drifts[0] / drifts[1]
    ok = drifts[0] <= 1e-8 and ratio >= 8.0
    _report("3 inviscid L2 conservation", ok,
            f"relative drift {drifts[0]:.3e} at dt=1e-3 (tol 1e-8), "
            f"improvement x{ratio:.1f} under halving (need >= 8)")


def test_criterion_04_energy_identity():
    basis = build_basis(DomainSpec(J=4))
    rng = np.random.default_rng(7)
    theta = _normalized(SpectralField(rng.standard_normal(16) * basis.lambdas ** -1.0,
                                      basis), 2.0, 2.0)
    residuals = []
    dts = (4e-2, 2e-2, 1e-2, 5e-3)
    for dt in dts:
        cfg = SolverConfig(J=4, alpha=0.5, kappa=1.0, dt=dt, T=0.5,
                           snapshot_stride=1).validate()
        _traj, rows = run(theta, cfg)
        residuals.append(float(np.max(np.abs(energy_residuals(rows, 1.0)))))
    orders = [math.log2(a / b) for a, b in zip(residuals, residuals[1:])]
    orders_converge = all(b >= a - 1e-6 for a, b in zip(orders, orders[1:]))

    cfg = SolverConfig(J=2, alpha=0.5, kappa=1.0, dt=1e-3, T=1.0,
                       include_advection=False, snapshot_stride=100).validate()
    basis2 = build_basis(DomainSpec(J=2))
    _traj, rows = run(unit_field(basis2, 1, 1), cfg)
    decay_dev = max(abs(r.L2 - math.exp(-math.sqrt(2.0) * r.t)) for r in rows)

    ok = orders[-1] >= 1.9 and orders_converge and decay_dev <= 1e-10
    _report("4 energy identity", ok,
            f"residual orders {[f'{o:.3f}' for o in orders]} "
            f"(monotone toward 2, finest >= 1.9), "
            f"single-mode decay deviation {decay_dev:.3e} (tol 1e-10)")


def test_criterion_05_cordoba():
    basis = build_basis(DomainSpec(J=6))
    rng = np.random.default_rng(2024)
    smooth_branch = [(r, s) for r in (4.0, 6.0) for s in (0.5, 1.0, 1.5, 2.0)]
    kink_branch = [(r, s) for r in (2.0, 3.0) for s in (0.5, 1.0)]
    n = failures = 0
    worst_margin = np.inf
    for _ in range(200):
        f = random_field(basis, rng, decay=1.5, norm_order=0.0, norm_value=1.0)
        for r, s in smooth_branch + kink_branch:
            rpt = cordoba_report(f, r, s, rel_tolerance=1e-8)
            failures += not rpt.passed
            worst_margin = min(worst_margin, rpt.worst_violation + rpt.tolerance)
            n += 1
    _report("5 pointwise convexity inequality", failures == 0,
            f"{n} checks (200 fields x 12 branch combos), {failures} failures, "
            f"worst margin {worst_margin:.3e} "
            "(tol = 1e-8 * scale + projection allowance)")


def test_criterion_06_lp_decay():
    results = []
    for alpha, r in ((0.75, 4.0), (0.5, 2.0)):
        cfg = SolverConfig(J=8, alpha=alpha, kappa=1.0, dt=1e-3, T=2.0,
                           snapshot_stride=50, seed=6, lr_norms=(r,)).validate()
        basis = basis_for(cfg)
        theta0 = random_field(basis, np.random.default_rng(6), decay=2.0,
                              norm_order=2.0, norm_value=2.0)
        from sqgbox.checks import lp_monotonicity
        traj, _rows = run(theta0, cfg)
        rpt = lp_monotonicity(traj, r, tolerance=1e-6)
        results.append((alpha, r, rpt))
    ok = all(r.passed for _, _, r in results)
    detail = "; ".join(f"alpha={a}, r={rr:g}: worst increase {-p.worst_violation:.3e}"
                       for a, rr, p in results)
    _report("6 Lr monotone decay", ok, detail + " (tol 1e-6 relative)")


def test_criterion_07_small_data_regime():
    cfg = SolverConfig(J=8, alpha=0.5, kappa=1.0, dt=1e-3, T=10.0,
                       snapshot_stride=100).validate()
    basis = basis_for(cfg)
    worst_ratio = 0.0
    for seed in range(100, 110):
        rng = np.random.default_rng(seed)
        frac = 0.2 + 0.7 * rng.random()
        target = frac * cfg.kappa / cfg.C
        theta0 = random_field(basis, rng, decay=2.0, norm_order=2.0,
                              norm_value=target)
        margin = smallness_margin(theta0, cfg.kappa, cfg.C)
        assert margin > 0
        _traj, rows = run(theta0, cfg)
        worst_ratio = max(worst_ratio, max(r.H2 for r in rows) / rows[0].H2)
    _report("7 small-data global regime", worst_ratio <= 1.0 + 1e-6,
            f"10 data with positive margin at frozen C={cfg.C:.6g}; "
            f"worst max H2 / initial = {worst_ratio:.12f} (tol 1+1e-6)")


def test_criterion_08_subcritical_boundedness():
    cfg = SolverConfig(J=8, alpha=0.75, kappa=1.0, dt=1e-3, T=10.0,
                       snapshot_stride=100).validate()
    basis = basis_for(cfg)
    theta0 = random_field(basis, np.random.default_rng(8), decay=2.0,
                          norm_order=2.0, norm_value=5.0)
    try:
        _traj, rows = run(theta0, cfg)
        tripped = False
        max_h2 = max(r.H2 for r in rows)
    except BlowUpError:
        tripped = True
        max_h2 = math.inf
    _report("8 subcritical boundedness", not tripped and np.isfinite(max_h2),
            f"T=10 run completed, max H2 = {max_h2:.6g} "
            f"(initial {sobolev_norm(theta0, 2.0):.6g}), no blow-up guard trip")


def test_criterion_09_retarded_mollification():
    cfg = SolverConfig(J=4, alpha=0.5, kappa=0.5, dt=1e-3, T=2.0,
                       snapshot_stride=25).validate()
    basis = basis_for(cfg)
    coeffs = np.zeros(basis.size)
    coeffs[basis.mode_index(1, 1)] = 1.0
    coeffs[basis.mode_index(2, 1)] = 1.0
    theta0 = _normalized(SpectralField(coeffs, basis), 2.0, 3.0)

    direct, _rows = run(theta0, cfg)
    trajs = {}
    for delta in (0.2, 0.1, 0.05):
        trajs[delta], _ = run_retarded_mollification(theta0, delta, cfg)

    def dist(a, b):
        return max(np.linalg.norm(x.coeffs - y.coeffs)
                   for x, y in zip(a.snapshots, b.snapshots))

    d1 = dist(trajs[0.2], trajs[0.1])
    d2 = dist(trajs[0.1], trajs[0.05])
    sup = max(np.linalg.norm(s.coeffs) for s in direct.snapshots)
    rel = dist(trajs[0.05], direct) / sup
    ok = d2 < d1 and rel <= 0.05
    _report("9 retarded mollification sweep", ok,
            f"successive L-inf L2 differences {d1:.3e} > {d2:.3e} (monotone), "
            f"delta=0.05 vs direct: {100 * rel:.2f}% (tol 5%)")


def test_criterion_10_picard_iteration():
    basis = build_basis(DomainSpec(J=4))
    cfg = SolverConfig(J=4, kappa=0.0, dt=1e-3, T=0.1, snapshot_stride=20).validate()

    single = run_picard_inviscid(unit_field(basis, 1, 1, 0.3), 0.05, 1e-8, 25, cfg)
    theta0 = _normalized(SpectralField(
        np.random.default_rng(10).standard_normal(16) * basis.lambdas ** -1.0,
        basis), 2.0, 0.1)
    mixed = run_picard_inviscid(theta0, 0.05, 1e-10, 25, cfg)
    ratios = [b / a for a, b in zip(mixed.residuals, mixed.residuals[1:])]
    ok = (single.converged and single.iterations <= 2
          and mixed.converged and mixed.iterations <= 10
          and all(r < 1.0 for r in ratios))
    _report("10 viscosity-regularized fixed point", ok,
            f"single mode in {single.iterations} iteration(s) (<= 2); small data in "
            f"{mixed.iterations} with contraction ratios "
            f"{[f'{r:.2e}' for r in ratios]} (all < 1, <= 10 iterations)")


def test_criterion_11_commutator_homogeneity():
    basis = build_basis(DomainSpec(J=6))
    theta = random_field(basis, np.random.default_rng(11), decay=1.0,
                         norm_order=0.0, norm_value=1.0)
    rec = commutator_diagnostic(theta, 0.5)
    rec_scaled = commutator_diagnostic(SpectralField(3.0 * theta.coeffs, basis), 0.5)
    dev = abs(rec_scaled.ratio - rec.ratio)
    single = commutator_diagnostic(unit_field(basis, 2, 3, 1.3), 0.5)
    ok = dev <= 1e-10 and single.lhs <= 1e-12
    _report("11 commutator homogeneity", ok,
            f"ratio deviation under 3x scaling {dev:.3e} (tol 1e-10), "
            f"single-mode size {single.lhs:.3e} (tol 1e-12)")


def test_criterion_12_reproducibility(tmp_path):
    cfg, _ = resolve_config(preset="subcritical_global",
                            overrides={"J": 4, "T": 0.2, "dt": 1e-3,
                                       "snapshot_stride": 10, "seed": 7})
    run_experiment("subcritical_global", cfg, tmp_path / "a")
    run_experiment("subcritical_global", cfg, tmp_path / "b")
    a = (tmp_path / "a" / "diagnostics.csv").read_bytes()
    b = (tmp_path / "b" / "diagnostics.csv").read_bytes()
    _report("12 bit-identical reproducibility", a == b,
            f"two identical runs, diagnostics CSV byte-equal ({len(a)} bytes)")

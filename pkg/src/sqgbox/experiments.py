"""Experiment drivers, the verification battery, and run persistence.

``run_experiment`` executes one named preset, writes diagnostics CSV,
boundary snapshots, optional plots, and a manifest JSON that lists every
emitted artifact.  Blow-up and iteration failure are recorded outcomes,
not crashes.  One experiment at a time may own an output directory
(guarded by a lock file).
"""

from __future__ import annotations

import json
import os
import time
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .basis import DomainSpec, EigenBasis, SpectralField, analyze, build_basis, \
    synthesize, unit_field
from .checks import COMMUTATOR_RATIO_ENVELOPE, InequalityReport, check_velocity, \
    commutator_diagnostic, cordoba_report, energy_balance, energy_residuals, \
    lp_monotonicity
from .config import SolverConfig, config_hash
from .dynamics import GammaTensor, gamma_tensor, nonlinear_term, nonlinear_via_gamma, \
    velocity
from .errors import BlowUpError, ConfigurationError
from .io import read_gamma, write_diagnostics_csv, write_reports_jsonl, write_snapshot
from .spectral import dot, interpolation_slack, sobolev_norm
from .stepping import local_existence_time, run, run_picard_inviscid, \
    run_retarded_mollification, smallness_margin, solve_linear_advection

OUTPUT_ROOT_ENV = "SQGBOX_OUTPUT_ROOT"

# Documented seeds of the verification battery.
SUITE_SEED = 1729


def basis_for(cfg: SolverConfig) -> EigenBasis:
    return build_basis(DomainSpec(cfg.Lx, cfg.Ly, cfg.J, cfg.nquad_resolved))


def random_field(basis: EigenBasis, rng, decay: float = 2.0,
                 norm_order: float | None = 2.0,
                 norm_value: float | None = 1.0) -> SpectralField:
    """Random band-limited field with spectrally decaying amplitudes.

    Coefficients are standard normal damped by lambda^{-decay/2}, then
    rescaled so the requested norm hits *norm_value* (when given).
    """
    coeffs = rng.standard_normal(basis.size) * basis.lambdas ** (-decay / 2.0)
    f = SpectralField(coeffs, basis)
    if norm_value is not None:
        current = sobolev_norm(f, norm_order if norm_order is not None else 0.0)
        if current == 0:
            raise ConfigurationError("cannot normalize a zero draw")
        f = SpectralField(coeffs * (norm_value / current), basis)
    return f


def make_initial_field(cfg: SolverConfig, basis: EigenBasis) -> SpectralField:
    spec = cfg.theta0
    kind = spec.get("kind", "random")
    if kind == "zero":
        return SpectralField(np.zeros(basis.size), basis)
    if kind == "single_mode":
        j = int(spec.get("j", 1))
        k = int(spec.get("k", 1))
        amp = float(spec.get("amplitude", 1.0))
        f = unit_field(basis, j, k, amp)
        if spec.get("norm_value") is not None:
            order = float(spec.get("norm_order", 2.0))
            f = SpectralField(
                f.coeffs * float(spec["norm_value"]) / sobolev_norm(f, order), basis)
        return f
    if kind == "modes":
        coeffs = np.zeros(basis.size)
        for j, k, amp in spec["entries"]:
            coeffs[basis.mode_index(int(j), int(k))] = float(amp)
        return SpectralField(coeffs, basis)
    if kind == "random":
        seed = spec.get("seed")
        rng = np.random.default_rng(cfg.seed if seed is None else int(seed))
        return random_field(basis, rng, decay=float(spec.get("decay", 2.0)),
                            norm_order=spec.get("norm_order", 2.0),
                            norm_value=spec.get("norm_value", 1.0))
    raise ConfigurationError(f"unknown theta0 kind {kind!r}")


def make_velocity_source(cfg: SolverConfig, basis: EigenBasis):
    spec = cfg.u_source
    kind = spec.get("kind", "zero")
    if kind == "zero":
        return velocity(SpectralField(np.zeros(basis.size), basis))
    if kind == "frozen_random":
        seed = spec.get("seed")
        rng = np.random.default_rng(cfg.seed + 1 if seed is None else int(seed))
        return velocity(random_field(basis, rng, decay=2.0, norm_order=2.0,
                                     norm_value=float(spec.get("norm_value", 1.0))))
    raise ConfigurationError(f"unknown u_source kind {kind!r}")


@dataclass
class RunManifest:
    """What one experiment produced and under which configuration."""

    preset: str
    config_hash: str
    code_version: str
    seed: int
    outcome: dict
    inputs: list[str] = field(default_factory=list)
    outputs: list[str] = field(default_factory=list)
    wall_clock_s: float = 0.0
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "preset": self.preset,
            "config_hash": self.config_hash,
            "code_version": self.code_version,
            "seed": self.seed,
            "outcome": self.outcome,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "wall_clock_s": self.wall_clock_s,
            "metadata": self.metadata,
        }


class OutputLock:
    """Exclusive lock file guarding an output directory."""

    def __init__(self, out_dir: Path):
        self.path = Path(out_dir) / ".lock"

    def __enter__(self):
        try:
            fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise OSError(
                f"output directory {self.path.parent} is locked by another "
                "experiment (remove .lock if stale)") from None
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        return self

    def __exit__(self, *exc):
        try:
            self.path.unlink()
        except FileNotFoundError:
            pass
        return False


def _write_plot(csv_path: Path, png_path: Path, lr_norms):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    from .io import read_diagnostics_csv

    data = read_diagnostics_csv(csv_path)
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for col in ("L2", "Halpha", "H2", "H2alpha"):
        ax.plot(data["t"], data[col], label=col)
    ax.set_xlabel("t")
    ax.set_ylabel("norm")
    ax.set_yscale("log")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(png_path, dpi=120)
    plt.close(fig)


def _dispatch(preset: str, cfg: SolverConfig, basis: EigenBasis,
              theta0: SpectralField):
    """Run the preset's driver; returns (outcome, traj, rows, metadata)."""
    meta: dict = {}
    if preset == "local_existence":
        t_window = local_existence_time(theta0, cfg.kappa, cfg.M)
        meta["local_existence_time"] = t_window
        cfg_run = replace(cfg, T=min(cfg.T, t_window),
                          dt=min(cfg.dt, t_window / 10.0))
        traj, rows = run(theta0, cfg_run)
        meta["max_H2_over_initial"] = max(r.H2 for r in rows) / rows[0].H2
        return {"kind": "completed"}, traj, rows, meta
    if preset == "small_data_global":
        meta["smallness_margin"] = smallness_margin(theta0, cfg.kappa, cfg.C)
        traj, rows = run(theta0, cfg)
        meta["max_H2_over_initial"] = max(r.H2 for r in rows) / rows[0].H2
        return {"kind": "completed"}, traj, rows, meta
    if preset in ("subcritical_global", "inviscid_local"):
        traj, rows = run(theta0, cfg)
        return {"kind": "completed"}, traj, rows, meta
    if preset == "linear_advection":
        provider = make_velocity_source(cfg, basis)
        traj, rows = solve_linear_advection(provider, theta0, cfg)
        meta["max_H2"] = max(r.H2 for r in rows)
        return {"kind": "completed"}, traj, rows, meta
    if preset == "retarded_mollification":
        traj, rows = run_retarded_mollification(theta0, cfg.delta, cfg)
        return {"kind": "completed"}, traj, rows, meta
    if preset == "picard_inviscid":
        result = run_picard_inviscid(theta0, cfg.kappa_visc, cfg.picard_tol,
                                     cfg.picard_max_iter, cfg)
        meta["residuals"] = result.residuals
        meta["w2p_proxies"] = result.w2p_proxies
        meta["iterations"] = result.iterations
        outcome = ({"kind": "completed"} if result.converged
                   else {"kind": "iteration_failure",
                         "residuals": result.residuals})
        return outcome, result.trajectory, result.rows, meta
    raise ConfigurationError(f"no driver for preset {preset!r}")


def run_experiment(preset: str, cfg: SolverConfig, out_dir,
                   config_path: str | None = None) -> RunManifest:
    """Execute *preset* under *cfg*, writing all artifacts into *out_dir*."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()

    with OutputLock(out):
        if preset == "verify_suite":
            reports = verify_suite()
            rpt_path = out / "reports.jsonl"
            write_reports_jsonl(reports, rpt_path)
            manifest = RunManifest(
                preset=preset, config_hash=config_hash(cfg),
                code_version=__version__, seed=cfg.seed,
                outcome={"kind": "completed"},
                inputs=[config_path] if config_path else [],
                outputs=[str(rpt_path)],
                wall_clock_s=time.perf_counter() - started,
                metadata={"n_reports": len(reports),
                          "n_failed": sum(not r.passed for r in reports)})
            (out / "manifest.json").write_text(json.dumps(manifest.to_dict(), indent=2))
            return manifest

        basis = basis_for(cfg)
        theta0 = make_initial_field(cfg, basis)
        if preset == "small_data_global" and cfg.theta0.get("norm_value") is None:
            target = cfg.margin_fraction * cfg.kappa / cfg.C
            theta0 = SpectralField(
                theta0.coeffs * target / max(sobolev_norm(theta0, 2.0), 1e-300), basis)

        outputs: list[str] = []
        meta: dict = {}
        try:
            outcome, traj, rows, meta = _dispatch(preset, cfg, basis, theta0)
        except BlowUpError as exc:
            outcome = {"kind": "blow_up", "t": exc.t}
            traj, rows = exc.trajectory, exc.rows

        csv_path = out / "diagnostics.csv"
        write_diagnostics_csv(rows, csv_path, cfg.lr_norms)
        outputs.append(str(csv_path))

        snap0 = out / "snapshot_initial.bin"
        write_snapshot(snap0, theta0, cfg.alpha, cfg.kappa, 0.0)
        outputs.append(str(snap0))
        if traj is not None and traj.snapshots:
            snap1 = out / "snapshot_final.bin"
            write_snapshot(snap1, traj.snapshots[-1], cfg.alpha, cfg.kappa,
                           float(traj.times[-1]))
            outputs.append(str(snap1))
            if cfg.save_snapshots:
                snap_dir = out / "snapshots"
                snap_dir.mkdir(exist_ok=True)
                for t, snap in zip(traj.times, traj.snapshots):
                    p = snap_dir / f"snap_{t:012.6f}.bin"
                    write_snapshot(p, snap, cfg.alpha, cfg.kappa, float(t))
                    outputs.append(str(p))
        if cfg.plot:
            png = out / "norms.png"
            _write_plot(csv_path, png, cfg.lr_norms)
            outputs.append(str(png))

        manifest = RunManifest(
            preset=preset, config_hash=config_hash(cfg), code_version=__version__,
            seed=cfg.seed, outcome=outcome,
            inputs=[config_path] if config_path else [],
            outputs=outputs, wall_clock_s=time.perf_counter() - started,
            metadata=meta)
        (out / "manifest.json").write_text(json.dumps(manifest.to_dict(), indent=2))
        return manifest


def load_gamma_for(cfg: SolverConfig, basis: EigenBasis) -> GammaTensor:
    if cfg.gamma_cache:
        return read_gamma(cfg.gamma_cache, basis)
    return gamma_tensor(basis)


# ---------------------------------------------------------------------------
# Verification battery
# ---------------------------------------------------------------------------

def _check_roundtrip() -> InequalityReport:
    worst = 0.0
    n = 0
    for J in (2, 4, 8):
        basis = build_basis(DomainSpec(J=J))
        rng = np.random.default_rng(SUITE_SEED + J)
        for _ in range(100):
            f = SpectralField(rng.standard_normal(basis.size), basis)
            back = analyze(synthesize(f), basis)
            dev = np.max(np.abs(back.coeffs - f.coeffs))
            scale = max(np.max(np.abs(f.coeffs)), 1e-300)
            worst = max(worst, dev / scale)
            n += 1
    return InequalityReport.from_violation("spectral_roundtrip", n, -worst, 1e-12)


def _check_orthonormality() -> InequalityReport:
    basis = build_basis(DomainSpec(J=8))
    m = basis.size
    eye = np.eye(m)
    gram = np.empty((m, m))
    for i in range(m):
        g = synthesize(SpectralField(eye[i], basis))
        gram[i] = analyze(g, basis).coeffs
    worst = float(np.max(np.abs(gram - eye)))
    return InequalityReport.from_violation("orthonormality", m * m, -worst, 1e-12, J=8)


def _check_gamma_structure(gamma_override: GammaTensor | None = None) -> InequalityReport:
    basis = build_basis(DomainSpec(J=3))
    gamma = gamma_override if gamma_override is not None else gamma_tensor(basis)
    g = gamma.values
    worst_skew = float(np.max(np.abs(g + g.transpose(0, 2, 1))))
    worst_diag = float(np.max(np.abs(np.einsum("jjl->jl", g))))
    worst = max(worst_skew, worst_diag)
    return InequalityReport.from_violation(
        "gamma_antisymmetry", g.size, -worst, 1e-12,
        worst_skew=worst_skew, worst_self_interaction=worst_diag)


def _check_path_equivalence() -> InequalityReport:
    basis = build_basis(DomainSpec(J=3))
    gamma = gamma_tensor(basis)
    rng = np.random.default_rng(SUITE_SEED)
    worst = 0.0
    for _ in range(10):
        theta = random_field(basis, rng, decay=1.0, norm_order=0.0, norm_value=1.0)
        a = nonlinear_term(theta).coeffs
        b = nonlinear_via_gamma(theta, gamma).coeffs
        worst = max(worst, float(np.max(np.abs(a - b))))
    return InequalityReport.from_violation("nonlinear_path_equivalence", 10, -worst, 1e-10)


def _check_nonlinear_orthogonality() -> InequalityReport:
    basis = build_basis(DomainSpec(J=4))
    rng = np.random.default_rng(SUITE_SEED + 7)
    worst = 0.0
    for _ in range(20):
        theta = random_field(basis, rng, decay=1.0, norm_order=0.0, norm_value=1.0)
        val = abs(dot(theta, nonlinear_term(theta)))
        worst = max(worst, val / float(theta.coeffs @ theta.coeffs))
    return InequalityReport.from_violation("advection_orthogonality", 20, -worst, 1e-11)


def _check_interpolation() -> InequalityReport:
    basis = build_basis(DomainSpec(J=6))
    rng = np.random.default_rng(SUITE_SEED + 11)
    lattice = [(0.0, 2.0, 0.5), (0.0, 2.0, 0.25), (0.5, 2.5, 0.5),
               (1.0, 2.0, 0.75), (0.0, 4.0, 0.5)]
    worst = 0.0
    n = 0
    for a1, a2, mu in lattice:
        for _ in range(1000):
            f = SpectralField(rng.standard_normal(basis.size), basis)
            slack = interpolation_slack(f, a1, a2, mu)
            scale = max(sobolev_norm(f, a1) ** mu * sobolev_norm(f, a2) ** (1 - mu), 1e-300)
            worst = min(worst, slack / scale)
            n += 1
    return InequalityReport.from_violation("norm_interpolation", n, worst, 1e-12)


def _check_velocity_admissibility() -> InequalityReport:
    basis = build_basis(DomainSpec(J=8))
    rng = np.random.default_rng(SUITE_SEED + 13)
    worst = 0.0
    for _ in range(10):
        theta = random_field(basis, rng, decay=1.0, norm_order=0.0, norm_value=1.0)
        rpt = check_velocity(velocity(theta))
        worst = max(worst, -rpt.worst_violation)
    return InequalityReport.from_violation("velocity_admissibility", 10, -worst, 1e-10)


def _check_cordoba() -> InequalityReport:
    basis = build_basis(DomainSpec(J=6))
    rng = np.random.default_rng(SUITE_SEED + 17)
    combos = [(4.0, 1.0), (4.0, 2.0), (6.0, 0.5), (2.0, 1.0), (3.0, 0.5)]
    worst_margin = np.inf
    n = 0
    failed = 0
    for _ in range(60):
        f = random_field(basis, rng, decay=1.5, norm_order=0.0, norm_value=1.0)
        for r, s in combos:
            rpt = cordoba_report(f, r, s)
            failed += not rpt.passed
            worst_margin = min(worst_margin,
                               rpt.worst_violation + rpt.tolerance)
            n += 1
    return InequalityReport.from_violation(
        "pointwise_convexity", n, worst_margin, 0.0,
        J=6, enlargement=4, seed=SUITE_SEED + 17, failed_samples=failed)


def _check_lp_decay() -> list[InequalityReport]:
    out = []
    for alpha, r in ((0.75, 4.0), (0.5, 2.0)):
        cfg = SolverConfig(J=6, alpha=alpha, kappa=1.0, dt=2e-3, T=1.0,
                           snapshot_stride=25, seed=SUITE_SEED,
                           lr_norms=(r,)).validate()
        basis = basis_for(cfg)
        theta0 = make_initial_field(cfg, basis)
        traj, _rows = run(theta0, cfg)
        out.append(lp_monotonicity(traj, r))
    return out


def _check_energy_conservation(gamma_override: GammaTensor | None = None) -> InequalityReport:
    cfg = SolverConfig(J=3, alpha=0.5, kappa=0.0, dt=1e-3, T=1.0,
                       scheme="rk4_fully_explicit", snapshot_stride=100,
                       seed=SUITE_SEED, nonlinear_path="gamma").validate()
    basis = basis_for(cfg)
    cfg.gamma = gamma_override if gamma_override is not None else gamma_tensor(basis)
    theta0 = make_initial_field(cfg, basis)
    _traj, rows = run(theta0, cfg)
    drift = max(abs(r.L2 - rows[0].L2) for r in rows) / rows[0].L2
    res = float(np.max(np.abs(energy_residuals(rows, 0.0))))
    worst = max(drift, res)
    return InequalityReport.from_violation(
        "inviscid_energy_conservation", len(rows), -worst, 1e-8,
        relative_drift=drift, max_residual=res)


def _check_energy_order() -> InequalityReport:
    basis = build_basis(DomainSpec(J=2))
    theta0 = unit_field(basis, 1, 1)
    rows_pair = []
    for dt in (2e-2, 1e-2):
        cfg = SolverConfig(J=2, alpha=0.5, kappa=1.0, dt=dt, T=0.5,
                           snapshot_stride=1, include_advection=False).validate()
        _traj, rows = run(theta0, cfg)
        rows_pair.append(rows)
    rpt = energy_balance(rows_pair[0], 1.0, rows_refined=rows_pair[1], tolerance=1.0)
    order = rpt.metadata.get("order", 0.0)
    return InequalityReport.from_violation(
        "energy_identity_order", len(rows_pair[0]), order - 2.0, 0.15, **rpt.metadata)


def _check_commutator_envelope() -> InequalityReport:
    basis = build_basis(DomainSpec(J=6))
    rng = np.random.default_rng(SUITE_SEED + 23)
    worst_ratio = 0.0
    worst_scale_dev = 0.0
    for _ in range(500):
        theta = random_field(basis, rng, decay=1.0, norm_order=0.0, norm_value=1.0)
        rec = commutator_diagnostic(theta, 0.5)
        worst_ratio = max(worst_ratio, rec.ratio)
        scaled = commutator_diagnostic(SpectralField(3.0 * theta.coeffs, basis), 0.5)
        worst_scale_dev = max(worst_scale_dev, abs(scaled.ratio - rec.ratio))
    violation = min(COMMUTATOR_RATIO_ENVELOPE - worst_ratio,
                    1e-10 - worst_scale_dev)
    return InequalityReport.from_violation(
        "commutator_envelope", 500, violation, 0.0,
        max_ratio=worst_ratio, envelope=COMMUTATOR_RATIO_ENVELOPE,
        scaling_invariance_defect=worst_scale_dev)


_SUITE = {
    "roundtrip": _check_roundtrip,
    "orthonormality": _check_orthonormality,
    "gamma_structure": _check_gamma_structure,
    "path_equivalence": _check_path_equivalence,
    "advection_orthogonality": _check_nonlinear_orthogonality,
    "interpolation": _check_interpolation,
    "velocity": _check_velocity_admissibility,
    "cordoba": _check_cordoba,
    "lp_decay": _check_lp_decay,
    "energy_conservation": _check_energy_conservation,
    "energy_order": _check_energy_order,
    "commutator": _check_commutator_envelope,
}


def suite_names() -> tuple[str, ...]:
    return tuple(_SUITE)


def verify_suite(names=None, gamma_override: GammaTensor | None = None) -> list[InequalityReport]:
    """Run the property battery (or a named subset) at the documented seeds."""
    if names is None:
        selected = list(_SUITE)
    else:
        unknown = [n for n in names if n not in _SUITE]
        if unknown:
            raise ConfigurationError(f"unknown suite selection {unknown}")
        selected = list(names)
    if not selected:
        warnings.warn("empty verification suite selection; nothing to run",
                      stacklevel=2)
        return []
    reports: list[InequalityReport] = []
    for name in selected:
        fn = _SUITE[name]
        if name in ("gamma_structure", "energy_conservation"):
            result = fn(gamma_override)
        else:
            result = fn()
        if isinstance(result, list):
            reports.extend(result)
        else:
            reports.append(result)
    return reports

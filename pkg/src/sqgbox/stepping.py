"""Time integration of the Galerkin system and the constructive schemes.

One generic loop drives four front ends:

* ``run`` -- the dissipative/inviscid quadratic system itself;
* ``solve_linear_advection`` -- frozen-per-step transport by a supplied
  divergence-free velocity;
* ``run_retarded_mollification`` -- transport by a time-lagged mollified
  velocity built from the solution's own history, which makes each lag
  window a linear problem;
* ``run_picard_inviscid`` -- fixed-point iteration where each iterate
  solves a linear advection problem with full-Laplacian viscosity and
  velocity reconstructed from the previous iterate.

Schemes: ``etdrk2`` applies the diagonal dissipative factor
exp(-kappa * lambda^alpha * dt) exactly per mode; ``imex_euler`` treats
dissipation implicitly; ``rk4_fully_explicit`` is the classical
Runge-Kutta method on the full right-hand side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .basis import EigenBasis, GridField, SpectralField, analyze, grid_lp_norm, \
    synthesize_derivative
from .config import SolverConfig
from .dynamics import GammaTensor, VelocityField, gamma_tensor, nonlinear_term, \
    velocity
from .errors import BlowUpError, ConfigurationError, DomainError, PreconditionError
from .spectral import sobolev_norm


@dataclass
class Trajectory:
    """Snapshot series of one run; times strictly increasing."""

    times: np.ndarray
    snapshots: list[SpectralField]
    config: SolverConfig


@dataclass
class DiagnosticsRow:
    """Monitored norms at one snapshot time.

    ``energy_residual`` is the defect of the discrete energy identity
    0.5 d/dt ||theta||^2 + kappa ||Lambda^alpha theta||^2 = 0 over the
    interval ending at this row (0 for the first row).
    """

    t: float
    L2: float
    Halpha: float
    H2: float
    H2alpha: float
    lr: dict = field(default_factory=dict)
    energy_residual: float = 0.0


def _phi1(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    small = np.abs(z) < 1e-5
    zs = z[small]
    out[small] = 1.0 + zs / 2.0 + zs * zs / 6.0
    zb = z[~small]
    out[~small] = np.expm1(zb) / zb
    return out


def _phi2(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    small = np.abs(z) < 1e-4
    zs = z[small]
    out[small] = 0.5 + zs / 6.0 + zs * zs / 24.0
    zb = z[~small]
    out[~small] = (np.expm1(zb) - zb) / (zb * zb)
    return out


class _Stepper:
    """One-step propagator for dc/dt = N(c, t) - decay * c."""

    def __init__(self, scheme: str, decay: np.ndarray, dt: float, nfun):
        self.scheme = scheme
        self.decay = decay
        self.dt = dt
        self.nfun = nfun
        if scheme == "etdrk2":
            z = -decay * dt
            self.exp_full = np.exp(z)
            self.phi1_dt = dt * _phi1(z)
            self.phi2_dt = dt * _phi2(z)
        elif scheme == "imex_euler":
            self.implicit = 1.0 / (1.0 + dt * decay)
        elif scheme != "rk4_fully_explicit":
            raise ConfigurationError(f"unknown scheme {scheme!r}")

    def __call__(self, c: np.ndarray, t: float) -> np.ndarray:
        dt = self.dt
        if self.scheme == "etdrk2":
            n0 = self.nfun(c, t)
            a = self.exp_full * c + self.phi1_dt * n0
            n1 = self.nfun(a, t + dt)
            return a + self.phi2_dt * (n1 - n0)
        if self.scheme == "imex_euler":
            return (c + dt * self.nfun(c, t)) * self.implicit
        # rk4_fully_explicit
        f = lambda y, s: self.nfun(y, s) - self.decay * y
        k1 = f(c, t)
        k2 = f(c + 0.5 * dt * k1, t + 0.5 * dt)
        k3 = f(c + 0.5 * dt * k2, t + 0.5 * dt)
        k4 = f(c + dt * k3, t + dt)
        return c + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _make_row(basis: EigenBasis, c: np.ndarray, t: float, kappa_row: float,
              alpha_row: float, lr_norms, prev: DiagnosticsRow | None) -> DiagnosticsRow:
    f = SpectralField(c, basis)
    row = DiagnosticsRow(
        t=t,
        L2=sobolev_norm(f, 0.0),
        Halpha=sobolev_norm(f, alpha_row),
        H2=sobolev_norm(f, 2.0),
        H2alpha=sobolev_norm(f, 2.0 + alpha_row),
    )
    if lr_norms:
        from .basis import synthesize
        g = synthesize(f)
        row.lr = {r: grid_lp_norm(g, basis, r) for r in lr_norms}
    if prev is not None:
        dt_row = row.t - prev.t
        row.energy_residual = (0.5 * (row.L2 ** 2 - prev.L2 ** 2) / dt_row
                               + kappa_row * 0.5 * (row.Halpha ** 2 + prev.Halpha ** 2))
    return row


def _run_loop(basis: EigenBasis, c0: np.ndarray, decay: np.ndarray, nfun,
              cfg: SolverConfig, kappa_row: float, alpha_row: float,
              store_every_step: bool = False):
    """Shared integration loop; returns (trajectory, rows[, per-step coeffs])."""
    n_steps = max(1, int(round(cfg.T / cfg.dt)))
    stepper = _Stepper(cfg.scheme, decay, cfg.dt, nfun)
    stride = cfg.snapshot_stride

    h2_0 = sobolev_norm(SpectralField(c0, basis), 2.0)
    times = [0.0]
    snaps = [SpectralField(c0.copy(), basis)]
    rows = [_make_row(basis, c0, 0.0, kappa_row, alpha_row, cfg.lr_norms, None)]
    every = [c0.copy()] if store_every_step else None

    c = c0.copy()
    t = 0.0
    for i in range(1, n_steps + 1):
        c_new = stepper(c, t)
        t_new = i * cfg.dt
        bad = not np.all(np.isfinite(c_new))
        if not bad and h2_0 > 0:
            bad = sobolev_norm(SpectralField(c_new, basis), 2.0) > cfg.blowup_factor * h2_0
        if bad:
            traj = Trajectory(np.array(times), snaps, cfg)
            raise BlowUpError(t, SpectralField(c.copy(), basis), traj, rows)
        c, t = c_new, t_new
        if every is not None:
            every.append(c.copy())
        if i % stride == 0 or i == n_steps:
            rows.append(_make_row(basis, c, t, kappa_row, alpha_row,
                                  cfg.lr_norms, rows[-1]))
            times.append(t)
            snaps.append(SpectralField(c.copy(), basis))

    traj = Trajectory(np.array(times), snaps, cfg)
    if store_every_step:
        return traj, rows, np.array(every)
    return traj, rows


def _sqg_advection_fn(basis: EigenBasis, cfg: SolverConfig):
    """N(c, t) = -P(u . grad theta) for the quadratic system (or 0)."""
    if not cfg.include_advection:
        zero = np.zeros(basis.size)
        return lambda c, t: zero
    if cfg.nonlinear_path == "gamma":
        gamma = cfg.gamma
        if gamma is None and getattr(cfg, "gamma_cache", None):
            from .io import read_gamma
            gamma = read_gamma(cfg.gamma_cache, basis)
        if gamma is None:
            gamma = gamma_tensor(basis)
        if not isinstance(gamma, GammaTensor):
            raise ConfigurationError("cfg.gamma must be a GammaTensor")
        gvals = gamma.values

        def nfun(c, t):
            return -np.einsum("jkl,j,k->l", gvals, c, c)

        return nfun

    def nfun(c, t):
        return -nonlinear_term(SpectralField(c, basis)).coeffs

    return nfun


def step(theta: SpectralField, cfg: SolverConfig) -> SpectralField:
    """Advance one step of the configured scheme; raises on blow-up."""
    basis = theta.basis
    decay = cfg.kappa * basis.lambdas ** cfg.alpha
    stepper = _Stepper(cfg.scheme, decay, cfg.dt, _sqg_advection_fn(basis, cfg))
    c = stepper(theta.coeffs, 0.0)
    if not np.all(np.isfinite(c)):
        raise BlowUpError(0.0, theta)
    return SpectralField(c, basis)


def run(theta0: SpectralField, cfg: SolverConfig) -> tuple[Trajectory, list[DiagnosticsRow]]:
    """Integrate the quadratic system to T (or until the blow-up guard trips)."""
    basis = theta0.basis
    decay = cfg.kappa * basis.lambdas ** cfg.alpha
    nfun = _sqg_advection_fn(basis, cfg)
    return _run_loop(basis, theta0.coeffs, decay, nfun, cfg, cfg.kappa, cfg.alpha)


def local_existence_time(theta0: SpectralField, kappa: float, M: float) -> float:
    """Guaranteed window kappa / (M * ||theta0||_{2,D}^2)."""
    if kappa <= 0 or M <= 0:
        raise DomainError("kappa and M must be positive")
    a0 = sobolev_norm(theta0, 2.0)
    if a0 == 0:
        raise DomainError("local existence time undefined for the zero field")
    return kappa / (M * a0 ** 2)


def smallness_margin(theta0: SpectralField, kappa: float, C: float) -> float:
    """kappa/C - ||theta0||_{2,D}; positive means small-data regime for this C."""
    if kappa <= 0 or C <= 0:
        raise DomainError("kappa and C must be positive")
    return kappa / C - sobolev_norm(theta0, 2.0)


def _advection_with_velocity(basis: EigenBasis, vel: VelocityField):
    u1 = vel.u1.values
    u2 = vel.u2.values

    def apply(c: np.ndarray) -> np.ndarray:
        theta = SpectralField(c, basis)
        tx = synthesize_derivative(theta, dx=1, dy=0).values
        ty = synthesize_derivative(theta, dx=0, dy=1).values
        product = GridField(u1 * tx + u2 * ty, basis.domain)
        return -analyze(product, basis).coeffs

    return apply


def _require_admissible(vel: VelocityField, tol: float = 1e-8):
    from .checks import check_velocity

    report = check_velocity(vel, tolerance=tol)
    if not report.passed:
        raise PreconditionError(
            "velocity is not divergence-free and boundary-tangent: "
            f"worst defect {-report.worst_violation:.3e}")


def solve_linear_advection(u_provider, theta0: SpectralField,
                           cfg: SolverConfig) -> tuple[Trajectory, list[DiagnosticsRow]]:
    """Integrate transport-diffusion by a supplied velocity, frozen per step.

    *u_provider* is either a single :class:`VelocityField` or a callable
    ``t -> VelocityField``.  The field at t = 0 must be divergence-free and
    tangent to the boundary.
    """
    basis = theta0.basis
    provider = u_provider if callable(u_provider) else (lambda t: u_provider)
    _require_admissible(provider(0.0))

    cache: dict[float, object] = {}

    def nfun(c, t):
        apply = cache.get(t)
        if apply is None:
            cache.clear()
            apply = _advection_with_velocity(basis, provider(t))
            cache[t] = apply
        return apply(c)

    decay = cfg.kappa * basis.lambdas ** cfg.alpha
    return _run_loop(basis, theta0.coeffs, decay, nfun, cfg, cfg.kappa, cfg.alpha)


# Mollifier: smooth bump supported in [1, 2], unit mass.  The
# normalization integral is fixed once by 16-point Gauss-Legendre.
def _bump_raw(tau):
    tau = np.asarray(tau, dtype=float)
    u = 2.0 * tau - 3.0
    inside = np.abs(u) < 1.0
    out = np.zeros_like(tau)
    with np.errstate(divide="ignore", over="ignore"):
        vals = np.exp(-1.0 / np.clip(1.0 - u ** 2, 1e-300, None))
    out[inside] = vals[inside]
    return out


def _bump_mass() -> float:
    nodes, weights = np.polynomial.legendre.leggauss(16)
    tau = 1.5 + 0.5 * nodes
    return float(0.5 * weights @ _bump_raw(tau))


_BUMP_Z = 1.0 / _bump_mass()


def mollifier(tau):
    """Normalized bump supported in [1, 2] with unit integral."""
    return _BUMP_Z * _bump_raw(tau)


def run_retarded_mollification(theta0: SpectralField, delta: float,
                               cfg: SolverConfig) -> tuple[Trajectory, list[DiagnosticsRow]]:
    """Integrate transport by the lagged mollified velocity.

    The advecting field at time t averages the solution's own history over
    [t - 2*delta, t - delta] against the mollifier, with the convention
    that the solution vanishes before t = 0.  On [0, delta] the velocity
    is therefore exactly zero and the flow is pure diffusion.
    """
    if delta <= 0:
        raise ConfigurationError(f"delta={delta} must be positive")
    if delta < 2 * cfg.dt:
        raise ConfigurationError(
            f"delta={delta} must be at least 2*dt={2 * cfg.dt} to resolve the lag window")
    basis = theta0.basis
    dt = cfg.dt

    # lag offsets s_k = k*dt inside [delta, 2*delta]; trapezoid in s against
    # phi(s/delta)/delta (second-order, below integrator error)
    k_lo = math.ceil(delta / dt - 1e-12)
    k_hi = math.floor(2.0 * delta / dt + 1e-12)
    ks = np.arange(k_lo, k_hi + 1)
    if ks.size < 2:
        raise ConfigurationError("lag window resolves fewer than two steps")
    w = mollifier(ks * dt / delta) * (dt / delta)
    w[0] *= 0.5
    w[-1] *= 0.5

    history = [theta0.coeffs.copy()]
    zero = np.zeros(basis.size)

    def lagged_coeffs(step_index: int) -> np.ndarray:
        acc = zero.copy()
        for kk, wk in zip(ks, w):
            idx = step_index - kk
            if idx >= 0:
                if idx >= len(history) or history[idx] is None:
                    raise RuntimeError("history buffer underrun (internal error)")
                acc += wk * history[idx]
        return acc

    vel_cache: dict[int, object] = {}

    def nfun(c, t):
        step_index = int(round(t / dt))
        apply = vel_cache.get(step_index)
        if apply is None:
            vel_cache.clear()
            mean = lagged_coeffs(step_index)
            if np.any(mean):
                apply = _advection_with_velocity(basis, velocity(SpectralField(mean, basis)))
            else:
                apply = lambda cc: zero
            vel_cache[step_index] = apply
        return apply(c)

    decay = cfg.kappa * basis.lambdas ** cfg.alpha
    n_steps = max(1, int(round(cfg.T / dt)))
    stepper = _Stepper(cfg.scheme, decay, dt, nfun)
    stride = cfg.snapshot_stride

    h2_0 = sobolev_norm(theta0, 2.0)
    times = [0.0]
    snaps = [SpectralField(theta0.coeffs.copy(), basis)]
    rows = [_make_row(basis, theta0.coeffs, 0.0, cfg.kappa, cfg.alpha, cfg.lr_norms, None)]

    c = theta0.coeffs.copy()
    for i in range(1, n_steps + 1):
        c_new = stepper(c, (i - 1) * dt)
        bad = not np.all(np.isfinite(c_new))
        if not bad and h2_0 > 0:
            bad = sobolev_norm(SpectralField(c_new, basis), 2.0) > cfg.blowup_factor * h2_0
        if bad:
            traj = Trajectory(np.array(times), snaps, cfg)
            raise BlowUpError((i - 1) * dt, SpectralField(c.copy(), basis), traj, rows)
        c = c_new
        history.append(c.copy())
        if i % stride == 0 or i == n_steps:
            rows.append(_make_row(basis, c, i * dt, cfg.kappa, cfg.alpha,
                                  cfg.lr_norms, rows[-1]))
            times.append(i * dt)
            snaps.append(SpectralField(c.copy(), basis))
        # drop history older than the lag window
        if len(history) > k_hi + 2:
            history[: len(history) - (k_hi + 2)] = \
                [None] * (len(history) - (k_hi + 2))  # type: ignore[list-item]

    return Trajectory(np.array(times), snaps, cfg), rows


@dataclass
class PicardResult:
    """Outcome of the viscosity-regularized fixed-point iteration."""

    trajectory: Trajectory
    rows: list
    residuals: list[float]
    w2p_proxies: list[float]
    converged: bool
    iterations: int


def run_picard_inviscid(theta0: SpectralField, kappa_visc: float, tol: float,
                        max_iter: int, cfg: SolverConfig) -> PicardResult:
    """Fixed-point iteration toward the inviscid flow with added viscosity.

    Iterate n solves linear transport by the velocity of iterate n-1 with
    dissipation kappa_visc * (full Laplacian); the 0th iterate uses zero
    velocity.  Stops when sup_t of the L2 difference between consecutive
    iterates drops below *tol*.  Non-convergence is reported in the result,
    not raised.
    """
    if kappa_visc <= 0:
        raise ConfigurationError("kappa_visc must be positive")
    if tol <= 0:
        raise ConfigurationError("tol must be positive")
    basis = theta0.basis
    decay = kappa_visc * basis.lambdas  # full Laplacian multiplier
    n_steps = max(1, int(round(cfg.T / cfg.dt)))
    zero = np.zeros(basis.size)

    def solve_iterate(u_of_step):
        stepper = _Stepper(cfg.scheme, decay, cfg.dt, u_of_step)
        states = np.empty((n_steps + 1, basis.size))
        states[0] = theta0.coeffs
        for i in range(1, n_steps + 1):
            states[i] = stepper(states[i - 1], (i - 1) * cfg.dt)
            if not np.all(np.isfinite(states[i])):
                raise BlowUpError((i - 1) * cfg.dt, SpectralField(states[i - 1], basis))
        return states

    def w2p_proxy(states) -> float:
        worst = 0.0
        for c in states[:: max(1, cfg.snapshot_stride)]:
            lap = SpectralField(basis.lambdas * c, basis)
            from .basis import synthesize
            worst = max(worst, grid_lp_norm(synthesize(lap), basis, cfg.w2p_order))
        return worst

    prev = solve_iterate(lambda c, t: zero)
    residuals: list[float] = []
    proxies: list[float] = [w2p_proxy(prev)]
    converged = False
    iterations = 0

    for n in range(1, max_iter + 1):
        iterations = n
        vel_cache: dict[int, object] = {}

        def nfun(c, t, _prev=prev):
            idx = int(round(t / cfg.dt))
            apply = vel_cache.get(idx)
            if apply is None:
                vel_cache.clear()
                vel = velocity(SpectralField(_prev[idx], basis))
                apply = _advection_with_velocity(basis, vel)
                vel_cache[idx] = apply
            return apply(c)

        current = solve_iterate(nfun)
        res = float(np.max(np.linalg.norm(current - prev, axis=1)))
        residuals.append(res)
        proxies.append(w2p_proxy(current))
        prev = current
        if res < tol:
            converged = True
            break

    stride = cfg.snapshot_stride
    picks = sorted(set(range(0, n_steps + 1, stride)) | {n_steps})
    times = np.array([i * cfg.dt for i in picks])
    snaps = [SpectralField(prev[i].copy(), basis) for i in picks]
    rows = []
    prev_row = None
    for i in picks:
        prev_row = _make_row(basis, prev[i], i * cfg.dt, kappa_visc, 1.0,
                             cfg.lr_norms, prev_row)
        rows.append(prev_row)
    traj = Trajectory(times, snaps, cfg)
    return PicardResult(traj, rows, residuals, proxies, converged, iterations)

"""Solver configuration, experiment presets, and config-file parsing.

Configs are flat JSON key/value files.  Precedence, lowest to highest:
package defaults, preset overrides, config file, ``--set key=val``
flags.  Unknown keys and out-of-range values raise
:class:`ConfigurationError` naming the offending key.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path

from .errors import ConfigurationError

SCHEMA_VERSION = 1
SCHEMES = ("etdrk2", "imex_euler", "rk4_fully_explicit")

# Empirically calibrated constants for the local-existence window
# T = kappa / (M * ||theta0||_{2,D}^2) and the smallness threshold
# ||theta0||_{2,D} < kappa / C.  Neither constant is pinned by theory;
# these defaults come from the seeded bisection experiment in
# sqgbox.calibration (J=8, alpha=0.5, kappa=1, T=10, dt=2e-3, seeds 0..4;
# worst monotonicity threshold 1321, safety 1.25) and can be re-derived
# with `sqgbox calibrate C` / `sqgbox calibrate M`.
DEFAULT_SMALLNESS_C = 0.0009462528387585163
DEFAULT_LOCAL_M = 1.0

PRESET_NAMES = (
    "local_existence",
    "small_data_global",
    "subcritical_global",
    "inviscid_local",
    "linear_advection",
    "retarded_mollification",
    "picard_inviscid",
    "verify_suite",
)


@dataclass
class SolverConfig:
    """Fully resolved parameters of one experiment or run."""

    Lx: float = math.pi
    Ly: float = math.pi
    J: int = 8
    Nquad: int | None = None
    alpha: float = 0.5
    kappa: float = 1.0
    dt: float = 1e-3
    T: float = 1.0
    scheme: str = "etdrk2"
    snapshot_stride: int = 10
    seed: int = 0
    lr_norms: tuple[float, ...] = (2.0, 4.0)
    include_advection: bool = True
    nonlinear_path: str = "pseudo"
    gamma: object = None          # attached interaction tensor for the tensor path
    gamma_cache: str | None = None
    theta0: dict = field(default_factory=lambda: {
        "kind": "random", "decay": 2.0, "norm_order": 2.0, "norm_value": 1.0,
        "seed": None,
    })
    u_source: dict = field(default_factory=lambda: {"kind": "zero", "seed": None})
    delta: float = 0.1
    kappa_visc: float = 0.05
    picard_tol: float = 1e-8
    picard_max_iter: int = 25
    w2p_order: float = 4.0
    M: float = DEFAULT_LOCAL_M
    C: float = DEFAULT_SMALLNESS_C
    margin_fraction: float = 0.5
    blowup_factor: float = 1e6
    save_snapshots: bool = False
    plot: bool = False

    def validate(self) -> "SolverConfig":
        if not 0.0 < self.alpha <= 1.0:
            # alpha = 1 (full Laplacian rate) is accepted even though most
            # statements about the dissipative equation assume alpha < 1.
            raise ConfigurationError(f"alpha={self.alpha} outside (0, 1]")
        if self.kappa < 0:
            raise ConfigurationError(f"kappa={self.kappa} must be >= 0")
        if self.dt <= 0:
            raise ConfigurationError(f"dt={self.dt} must be positive")
        if self.T <= 0 or self.dt > self.T:
            raise ConfigurationError(f"need 0 < dt <= T, got dt={self.dt}, T={self.T}")
        if self.J < 1:
            raise ConfigurationError(f"J={self.J} must be >= 1")
        nq = self.Nquad if self.Nquad is not None else 2 * self.J + 2
        if nq < 2 * self.J + 2:
            raise ConfigurationError(
                f"Nquad={nq} below exactness threshold 2J+2={2 * self.J + 2}")
        if self.scheme not in SCHEMES:
            raise ConfigurationError(
                f"scheme={self.scheme!r} not one of {SCHEMES}")
        if self.snapshot_stride < 1:
            raise ConfigurationError("snapshot_stride must be >= 1")
        if self.nonlinear_path not in ("pseudo", "gamma"):
            raise ConfigurationError(
                f"nonlinear_path={self.nonlinear_path!r} not 'pseudo' or 'gamma'")
        for r in self.lr_norms:
            if r < 1:
                raise ConfigurationError(f"lr_norms entry {r} must be >= 1")
        return self

    @property
    def nquad_resolved(self) -> int:
        return self.Nquad if self.Nquad is not None else 2 * self.J + 2

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("gamma")
        d["lr_norms"] = list(self.lr_norms)
        d["schema_version"] = SCHEMA_VERSION
        return d


@dataclass(frozen=True)
class ExperimentPreset:
    """Named experiment regime with its parameter overrides."""

    name: str
    overrides: dict

    def __post_init__(self):
        if self.name not in PRESET_NAMES:
            raise ConfigurationError(
                f"unknown preset {self.name!r}; choose one of {PRESET_NAMES}")


PRESET_OVERRIDES: dict[str, dict] = {
    "local_existence": {
        "alpha": 0.5, "kappa": 1.0, "T": 1.0,
        "theta0": {"kind": "random", "decay": 2.0, "norm_order": 2.0,
                   "norm_value": 1.0, "seed": None},
    },
    "small_data_global": {
        "alpha": 0.5, "kappa": 1.0, "T": 10.0,
        "theta0": {"kind": "random", "decay": 2.0, "norm_order": 2.0,
                   "norm_value": None, "seed": None},  # norm set from margin
    },
    "subcritical_global": {
        "alpha": 0.75, "kappa": 1.0, "T": 10.0, "J": 8,
        "theta0": {"kind": "random", "decay": 2.0, "norm_order": 2.0,
                   "norm_value": 5.0, "seed": None},
    },
    "inviscid_local": {
        "kappa": 0.0, "scheme": "rk4_fully_explicit", "T": 1.0, "J": 4,
        "theta0": {"kind": "random", "decay": 2.0, "norm_order": 2.0,
                   "norm_value": 1.0, "seed": None},
    },
    "linear_advection": {
        "T": 1.0, "u_source": {"kind": "frozen_random", "seed": None},
    },
    "retarded_mollification": {
        "delta": 0.1, "T": 1.0, "J": 4,
    },
    "picard_inviscid": {
        "kappa": 0.0, "kappa_visc": 0.05, "T": 0.1, "picard_tol": 1e-8,
        "theta0": {"kind": "random", "decay": 2.0, "norm_order": 2.0,
                   "norm_value": 0.1, "seed": None},
    },
    "verify_suite": {},
}

_VALID_KEYS = {f.name for f in SolverConfig.__dataclass_fields__.values()} - {"gamma"}
_VALID_KEYS.add("schema_version")


def _coerce(key: str, value, template):
    """Parse a string override into the type of the current value."""
    if not isinstance(value, str):
        return value
    if isinstance(template, bool):
        if value.lower() in ("true", "1", "yes"):
            return True
        if value.lower() in ("false", "0", "no"):
            return False
        raise ConfigurationError(f"key {key}: cannot parse boolean from {value!r}")
    if isinstance(template, int) and not isinstance(template, bool):
        try:
            return int(value)
        except ValueError as exc:
            raise ConfigurationError(f"key {key}: expected integer, got {value!r}") from exc
    if isinstance(template, float):
        try:
            return float(value)
        except ValueError as exc:
            raise ConfigurationError(f"key {key}: expected number, got {value!r}") from exc
    if template is None or isinstance(template, (dict, list, tuple)):
        try:
            return json.loads(value)
        except json.JSONDecodeError:
            return value
    return value


def resolve_config(preset: str | None = None,
                   file_values: dict | None = None,
                   overrides: dict | None = None) -> tuple[SolverConfig, ExperimentPreset | None]:
    """Merge defaults, preset, file, and flag overrides into a validated config."""
    cfg = SolverConfig()
    layers = []
    preset_obj = None
    if preset is not None:
        if preset not in PRESET_OVERRIDES:
            raise ConfigurationError(
                f"unknown preset {preset!r}; choose one of {PRESET_NAMES}")
        preset_obj = ExperimentPreset(preset, dict(PRESET_OVERRIDES[preset]))
        layers.append(preset_obj.overrides)
    if file_values:
        layers.append(file_values)
    if overrides:
        layers.append(overrides)
    for layer in layers:
        for key, value in layer.items():
            if key == "schema_version":
                if int(value) != SCHEMA_VERSION:
                    raise ConfigurationError(
                        f"config schema_version {value} != supported {SCHEMA_VERSION}")
                continue
            if key not in _VALID_KEYS:
                raise ConfigurationError(f"unknown config key {key!r}")
            current = getattr(cfg, key)
            value = _coerce(key, value, current)
            if key == "lr_norms":
                value = tuple(float(r) for r in value)
            if key in ("theta0", "u_source") and isinstance(value, dict):
                merged = dict(getattr(cfg, key))
                merged.update(value)
                value = merged
            setattr(cfg, key, value)
    cfg.validate()
    return cfg, preset_obj


def parse_config(path: str | Path | None = None,
                 overrides: list[str] | dict | None = None,
                 preset: str | None = None) -> tuple[SolverConfig, ExperimentPreset | None]:
    """Load *path* (JSON), apply ``key=val`` overrides, resolve the preset."""
    file_values = None
    if path is not None:
        p = Path(path)
        if not p.exists():
            raise ConfigurationError(f"config file not found: {p}")
        try:
            file_values = json.loads(p.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config file {p} is not valid JSON: {exc}") from exc
        if not isinstance(file_values, dict):
            raise ConfigurationError(f"config file {p} must hold a JSON object")
    if isinstance(overrides, list):
        parsed = {}
        for item in overrides:
            if "=" not in item:
                raise ConfigurationError(f"override {item!r} is not of the form key=val")
            key, _, val = item.partition("=")
            parsed[key.strip()] = val.strip()
        overrides = parsed
    return resolve_config(preset=preset, file_values=file_values, overrides=overrides)


def config_hash(cfg: SolverConfig) -> str:
    """Stable hash of the resolved configuration."""
    import hashlib

    canonical = json.dumps(cfg.to_dict(), sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()

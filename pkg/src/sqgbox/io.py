"""Binary snapshot / interaction-tensor formats and the diagnostics CSV.

All binary payloads are 64-bit little-endian reals behind a fixed-size
header; loaders verify the header against the basis they are asked to
bind to.  Diagnostics go to CSV with a fixed column order and 17
significant digits.
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .basis import EigenBasis, SpectralField
from .dynamics import GammaTensor
from .errors import ShapeMismatchError

SNAPSHOT_MAGIC = b"SQGSNAP\x00"
SNAPSHOT_VERSION = 1
_SNAP_HEADER = struct.Struct("<8sI ddI ddd")  # magic, version, Lx, Ly, J, alpha, kappa, t

GAMMA_MAGIC = b"SQGGAMMA"
GAMMA_VERSION = 1
_GAMMA_HEADER = struct.Struct("<8sI ddII")  # magic, version, Lx, Ly, J, Nquad


def write_snapshot(path, field: SpectralField, alpha: float, kappa: float, t: float):
    domain = field.basis.domain
    header = _SNAP_HEADER.pack(SNAPSHOT_MAGIC, SNAPSHOT_VERSION,
                               domain.Lx, domain.Ly, domain.J, alpha, kappa, t)
    payload = np.asarray(field.coeffs, dtype="<f8").tobytes()
    Path(path).write_bytes(header + payload)


def read_snapshot(path, basis: EigenBasis | None = None):
    """Return (coeffs, header dict); bind and verify against *basis* if given."""
    raw = Path(path).read_bytes()
    magic, version, lx, ly, j, alpha, kappa, t = _SNAP_HEADER.unpack_from(raw)
    if magic != SNAPSHOT_MAGIC:
        raise ShapeMismatchError(f"{path}: not a snapshot file")
    if version != SNAPSHOT_VERSION:
        raise ShapeMismatchError(f"{path}: snapshot version {version} unsupported")
    coeffs = np.frombuffer(raw, dtype="<f8", offset=_SNAP_HEADER.size).astype(float)
    header = {"Lx": lx, "Ly": ly, "J": j, "alpha": alpha, "kappa": kappa, "t": t}
    if coeffs.size != j * j:
        raise ShapeMismatchError(f"{path}: payload length {coeffs.size} != J^2")
    if basis is not None:
        d = basis.domain
        if (j, lx, ly) != (d.J, d.Lx, d.Ly):
            raise ShapeMismatchError(
                f"{path}: snapshot domain (J={j}, Lx={lx}, Ly={ly}) does not match basis")
        return SpectralField(coeffs, basis), header
    return coeffs, header


def write_gamma(path, gamma: GammaTensor):
    d = gamma.basis.domain
    header = _GAMMA_HEADER.pack(GAMMA_MAGIC, GAMMA_VERSION, d.Lx, d.Ly, d.J, d.Nquad)
    payload = np.ascontiguousarray(gamma.values, dtype="<f8").tobytes()
    Path(path).write_bytes(header + payload)


def read_gamma(path, basis: EigenBasis) -> GammaTensor:
    raw = Path(path).read_bytes()
    magic, version, lx, ly, j, nquad = _GAMMA_HEADER.unpack_from(raw)
    if magic != GAMMA_MAGIC:
        raise ShapeMismatchError(f"{path}: not an interaction-tensor file")
    if version != GAMMA_VERSION:
        raise ShapeMismatchError(f"{path}: tensor version {version} unsupported")
    d = basis.domain
    if (lx, ly, j, nquad) != (d.Lx, d.Ly, d.J, d.Nquad):
        raise ShapeMismatchError(
            f"{path}: tensor header (Lx={lx}, Ly={ly}, J={j}, Nquad={nquad}) "
            f"does not match basis (Lx={d.Lx}, Ly={d.Ly}, J={d.J}, Nquad={d.Nquad})")
    m = j * j
    values = np.frombuffer(raw, dtype="<f8", offset=_GAMMA_HEADER.size).astype(float)
    if values.size != m ** 3:
        raise ShapeMismatchError(f"{path}: payload length {values.size} != m^3")
    return GammaTensor(values.reshape(m, m, m), basis)


def diagnostics_columns(lr_norms) -> list[str]:
    return (["t", "L2", "Halpha", "H2", "H2alpha"]
            + [f"Lr{r:g}" for r in lr_norms]
            + ["energy_residual"])


def write_diagnostics_csv(rows, path, lr_norms):
    """Fixed column order, 17 significant digits per value."""
    cols = diagnostics_columns(lr_norms)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(cols)
        for row in rows:
            record = [row.t, row.L2, row.Halpha, row.H2, row.H2alpha]
            record += [row.lr[r] for r in lr_norms]
            record.append(row.energy_residual)
            writer.writerow([format(v, ".17g") for v in record])


def read_diagnostics_csv(path):
    """Columns as a dict of float arrays (inverse of the writer)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        cols = next(reader)
        data = {c: [] for c in cols}
        for line in reader:
            for c, v in zip(cols, line):
                data[c].append(float(v))
    return {c: np.array(v) for c, v in data.items()}


def write_reports_jsonl(reports, path):
    with open(path, "w") as fh:
        for report in reports:
            fh.write(report.to_json() + "\n")

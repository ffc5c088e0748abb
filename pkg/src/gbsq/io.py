"""Run configuration, binary snapshots and CSV time series.

Config files are flat ``key = value`` lines with ``#`` comments.  Snapshots
are little-endian::

    b"GBSQ"  u32 version=1  u32 n  f64 t  f64 sigma gamma nu kappa alpha beta
    n*n f64 omega (row-major, axis 0 = x1)   n*n f64 theta

CSV floats are written with 17 significant digits so they re-read exactly.
"""

from __future__ import annotations

import csv
import dataclasses
import math
import os
import struct
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .dynamics import NumericsParams, State, SystemParams
from .fields import PRESETS


class ConfigError(ValueError):
    pass


class SnapshotFormatError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    n: int = 128
    t_end: float = 1.0
    dt_max: float = 1e-2
    cfl_factor: float = 0.4
    sigma: float = 0.0
    gamma: float = 0.0
    nu: float = 1.0
    kappa: float = 0.0
    alpha: float = 1.0
    beta: float = 1.0
    init_preset: str = "random"
    seed: int = 0
    amplitude: float = 1.0
    theta_amplitude: float = 1.0
    kmax: int = 8
    spectral_slope: float = 2.0
    blob_width: float = 0.5
    q_norm: float = 3.0
    dealias: bool = True
    output_dir: str = "out"
    snapshot_interval: float = 0.5
    series_interval: float = 0.01
    blowup_cap: float = 1e6

    def system(self) -> SystemParams:
        return SystemParams(self.nu, self.alpha, self.kappa, self.beta, self.sigma, self.gamma)

    def numerics(self) -> NumericsParams:
        return NumericsParams(self.n, self.t_end, self.dt_max, self.cfl_factor, self.dealias)

    def preset_kwargs(self) -> dict:
        return dict(
            seed=self.seed,
            amplitude=self.amplitude,
            theta_amplitude=self.theta_amplitude,
            kmax=self.kmax,
            spectral_slope=self.spectral_slope,
            blob_width=self.blob_width,
        )


_FIELD_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _convert(key: str, raw: str):
    kind = _FIELD_TYPES[key]
    if kind == "bool":
        low = raw.lower()
        if low in ("true", "yes", "on", "1"):
            return True
        if low in ("false", "no", "off", "0"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if kind == "int":
        value = float(raw)
        if not value.is_integer():
            raise ValueError(f"expected an integer, got {raw!r}")
        return int(value)
    if kind == "float":
        value = float(raw)
        if not math.isfinite(value):
            raise ValueError(f"expected a finite number, got {raw!r}")
        return value
    return raw


def _check(key: str, value) -> str | None:
    """Return an error message if ``value`` is out of range for ``key``."""
    if key == "n" and (value < 8 or value & (value - 1)):
        return "not a power of two >= 8"
    if key in ("t_end", "dt_max", "cfl_factor", "snapshot_interval", "series_interval", "blowup_cap") and value <= 0:
        return f"{key} must be positive"
    if key in ("sigma", "gamma", "nu", "kappa", "blob_width") and value < 0:
        return f"{key} out of range (must be >= 0)"
    if key in ("alpha", "beta") and not 0 < value <= 1:
        return f"{key} out of range (must lie in (0, 1])"
    if key == "init_preset" and value not in PRESETS:
        return f"unknown preset; expected one of {', '.join(PRESETS)}"
    if key == "q_norm" and value < 1:
        return "q_norm must be >= 1"
    if key == "kmax" and value < 1:
        return "kmax must be >= 1"
    return None


def parse_config(text: str) -> RunConfig:
    values = {}
    lines = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _FIELD_TYPES:
            raise ConfigError(f"line {lineno}: {key}: unknown key")
        if key in values:
            raise ConfigError(f"line {lineno}: {key}: duplicate key")
        try:
            value = _convert(key, raw)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: {key}: {exc}") from None
        msg = _check(key, value)
        if msg:
            raise ConfigError(f"line {lineno}: {key}: {msg}")
        values[key] = value
        lines[key] = lineno
    cfg = RunConfig(**values)
    if cfg.kmax >= cfg.n // 2 and cfg.init_preset in ("random", "blob"):
        where = f"line {lines['kmax']}: " if "kmax" in lines else ""
        raise ConfigError(f"{where}kmax: {cfg.kmax} not representable on an n={cfg.n} grid")
    return cfg


def format_config(cfg: RunConfig) -> str:
    out = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, bool):
            v = "true" if v else "false"
        elif isinstance(v, float):
            v = repr(v)
        out.append(f"{f.name} = {v}")
    return "\n".join(out) + "\n"


def load_config(path: str | os.PathLike) -> RunConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


# -- snapshots ---------------------------------------------------------------------------

MAGIC = b"GBSQ"
VERSION = 1
_HEADER = struct.Struct("<4sII7d")


def snapshot_size(n: int) -> int:
    return _HEADER.size + 16 * n * n


def write_snapshot(path: str | os.PathLike, state: State, params: SystemParams) -> None:
    n = state.omega.shape[-1]
    header = _HEADER.pack(
        MAGIC, VERSION, n, state.t,
        params.sigma, params.gamma, params.nu, params.kappa, params.alpha, params.beta,
    )
    payload = header + np.ascontiguousarray(state.omega, dtype="<f8").tobytes() + \
        np.ascontiguousarray(state.theta, dtype="<f8").tobytes()
    if len(payload) != snapshot_size(n):
        raise AssertionError("snapshot layout arithmetic is off")
    Path(path).write_bytes(payload)


def read_snapshot(path: str | os.PathLike) -> tuple[State, SystemParams]:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise SnapshotFormatError(f"{path}: truncated header ({len(data)} bytes)")
    magic, version, n, t, sigma, gamma, nu, kappa, alpha, beta = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise SnapshotFormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise SnapshotFormatError(f"{path}: unsupported version {version}")
    if len(data) != snapshot_size(n):
        raise SnapshotFormatError(f"{path}: expected {snapshot_size(n)} bytes for n={n}, got {len(data)}")
    body = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).astype(float)
    omega = body[: n * n].reshape(n, n)
    theta = body[n * n:].reshape(n, n)
    return State(t, omega, theta), SystemParams(nu, alpha, kappa, beta, sigma, gamma)


# -- CSV series ------------------------------------------------------------------------------

def _fmt(v) -> str:
    if isinstance(v, (bool, int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def append_series_row(path: str | os.PathLike, row) -> None:
    """Append a dataclass row, writing the header first if the file is new."""
    path = Path(path)
    new = not path.exists() or path.stat().st_size == 0
    with path.open("a", newline="") as fh:
        w = csv.writer(fh)
        if new:
            w.writerow(type(row).columns())
        w.writerow([_fmt(v) for v in dataclasses.astuple(row)])


def read_series(path: str | os.PathLike) -> tuple[list[str], list[list[float]]]:
    with Path(path).open(newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        rows = [[float(x) for x in line] for line in r]
    return header, rows

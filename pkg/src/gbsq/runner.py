"""Drive a configured integration: monitors, snapshots, blow-up detection, twin runs."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .diagnostics import Accumulators, NormRow, TwinRow, monitor_row, uniqueness_functional
from .dynamics import State, cfl_dt, step
from .fields import gaussian_blob, initial_fields
from .io import RunConfig, append_series_row, write_snapshot

log = logging.getLogger(__name__)

_EPS = 1e-12


@dataclass
class RunResult:
    state: State
    series: list[NormRow] = field(default_factory=list)
    snapshots: list[State] = field(default_factory=list)
    diverged: bool = False
    reason: str = ""


def initial_state(cfg: RunConfig) -> State:
    w, t = initial_fields(cfg.init_preset, cfg.n, **cfg.preset_kwargs())
    return State(0.0, w, t)


class _Schedule:
    """Output times k·interval (and t_end) strictly after the start time."""

    def __init__(self, interval: float, t_end: float, t0: float = 0.0):
        self.interval = interval
        self.t_end = t_end
        self.k = int(math.floor(t0 / interval + _EPS)) + 1

    @property
    def next(self) -> float:
        return min(self.k * self.interval, self.t_end)

    def due(self, t: float) -> bool:
        if t >= self.next - _EPS * max(1.0, t):
            while self.k * self.interval <= t + _EPS * max(1.0, t):
                self.k += 1
            return True
        return False


def _blown_up(state: State, cap: float) -> str:
    m = float(np.max(np.abs(state.omega)))
    if not math.isfinite(m) or not np.all(np.isfinite(state.theta)):
        return f"non-finite field at t={state.t:g}"
    if m > cap:
        return f"max|omega| = {m:.3e} exceeds cap {cap:g} at t={state.t:g}"
    return ""


def run(cfg: RunConfig, state: State | None = None, write: bool = False) -> RunResult:
    """Integrate ``cfg`` to t_end.

    Every step updates the running integrals; rows and snapshots are kept on
    their schedules (plus the final time).  With ``write`` the series goes to
    ``output_dir/series.csv`` and snapshots to ``output_dir/snap_XXXX.bin``.
    """
    params, numerics = cfg.system(), cfg.numerics()
    state = initial_state(cfg) if state is None else state
    out = Path(cfg.output_dir)
    if write:
        out.mkdir(parents=True, exist_ok=True)
        (out / "series.csv").unlink(missing_ok=True)

    result = RunResult(state)
    acc = Accumulators()

    def emit_row(row):
        result.series.append(row)
        if write:
            append_series_row(out / "series.csv", row)

    def emit_snapshot(s):
        result.snapshots.append(s)
        if write:
            write_snapshot(out / f"snap_{len(result.snapshots) - 1:04d}.bin", s, params)

    emit_row(monitor_row(state, params, acc, cfg.q_norm))
    emit_snapshot(state)
    rows = _Schedule(cfg.series_interval, cfg.t_end, state.t)
    snaps = _Schedule(cfg.snapshot_interval, cfg.t_end, state.t)

    while state.t < cfg.t_end - _EPS * max(1.0, cfg.t_end):
        dt = min(cfl_dt(state, params, numerics), rows.next - state.t, snaps.next - state.t)
        try:
            new = step(state, params, numerics, dt, check_cfl=False)
        except FloatingPointError as exc:
            result.diverged, result.reason = True, str(exc)
            break
        reason = _blown_up(new, cfg.blowup_cap)
        if reason:
            result.state = new
            result.diverged, result.reason = True, reason
            log.warning("run diverged: %s", reason)
            break
        row = monitor_row(new, params, acc, cfg.q_norm, prev=state)
        state = new
        if rows.due(state.t):
            emit_row(row)
        if snaps.due(state.t):
            emit_snapshot(state)
    result.state = state
    return result


def perturbed_theta(theta: np.ndarray, eps: float) -> np.ndarray:
    """θ(1 + eps·b) with b the unit Gaussian bump at (π, π)."""
    return theta * (1.0 + eps * gaussian_blob(theta.shape[-1], 0.5))


def twin_run(cfg: RunConfig, eps: float, write: bool = False) -> tuple[list[TwinRow], bool]:
    """Run the configured data and its θ-perturbed twin in lockstep.

    Both runs take identical time steps (the smaller CFL bound), so rows
    compare the two solutions at the same instants.
    """
    params, numerics = cfg.system(), cfg.numerics()
    a = initial_state(cfg)
    b = State(0.0, a.omega.copy(), perturbed_theta(a.theta, eps))
    rows = [uniqueness_functional(a, b, params.sigma, params.gamma)]
    sched = _Schedule(cfg.series_interval, cfg.t_end)
    diverged = False
    while a.t < cfg.t_end - _EPS * max(1.0, cfg.t_end):
        dt = min(cfl_dt(a, params, numerics), cfl_dt(b, params, numerics), sched.next - a.t)
        try:
            a = step(a, params, numerics, dt, check_cfl=False)
            b = step(b, params, numerics, dt, check_cfl=False)
        except FloatingPointError:
            diverged = True
            break
        if _blown_up(a, cfg.blowup_cap) or _blown_up(b, cfg.blowup_cap):
            diverged = True
            break
        if sched.due(a.t):
            rows.append(uniqueness_functional(a, b, params.sigma, params.gamma))
    if write:
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        path = out / "twin.csv"
        path.unlink(missing_ok=True)
        for r in rows:
            append_series_row(path, r)
    return rows, diverged

"""Built-in invariant suite run by ``gbsq check``.

Each check is small (n ≤ 128, a few dozen steps at most) and returns the
measured error next to its tolerance, so a failure says how far off it was.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .diagnostics import g_energy_balance, perp_identity_residual, velocity_formulation_residual
from .dynamics import State, SystemParams, integrate
from .fields import initial_fields, random_field
from .littlewood_paley import make_partition
from .spectral import (
    inv_laplacian,
    lambda_pow,
    log_laplacian_pow,
    make_grid,
    parseval_residual,
    perp_gradient,
    riesz_x1,
    transform,
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(np.isfinite(self.value) and self.value < self.tol)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag}  {self.name:<32s} {self.value:.3e}  (tol {self.tol:.0e})"


def _rel(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.max(np.abs(a - b)) / np.max(np.abs(b)))


def check_partition_of_unity() -> CheckResult:
    dev = max(make_partition(n).unity_deviation() for n in (64, 256))
    return CheckResult("partition of unity", dev, 1e-12)


def check_multipliers() -> CheckResult:
    g = make_grid(32)
    x1, x2 = g.x
    k1, k2 = 3, -2
    ph = k1 * x1 + k2 * x2
    f = np.cos(ph)
    r = math.hypot(k1, k2)
    errs = [
        _rel(lambda_pow(f, 0.7), r**0.7 * f),
        _rel(log_laplacian_pow(f, 1.5), math.log1p(r * r) ** 1.5 * f),
        _rel(riesz_x1(f), -(k1 / r) * np.sin(ph)),
        _rel(inv_laplacian(f), -f / r**2),
        _rel(perp_gradient(f), np.stack([k2 * np.sin(ph), -k1 * np.sin(ph)])),
    ]
    return CheckResult("multiplier eigenfunctions", max(errs), 1e-12)


def check_parseval() -> CheckResult:
    f = random_field(64, 11, kmax=20, slope=1.0)
    return CheckResult("parseval", parseval_residual(f), 1e-12)


def check_taylor_green() -> CheckResult:
    n, t_end = 32, 0.5
    w0, t0 = initial_fields("taylor_green", n)
    worst = 0.0
    for sigma, gamma in ((0.0, 0.0), (0.0, 1.0), (0.4, 2.0)):
        params = SystemParams(sigma=sigma, gamma=gamma)
        out = integrate(State(0.0, w0, t0), params, t_end, 1e-2)
        worst = max(worst, _rel(out.omega, math.exp(-math.sqrt(2.0) * t_end) * w0))
    return CheckResult("taylor-green decay", worst, 1e-10)


def _balance_run(theta_amplitude: float) -> float:
    n, dt = 64, 1e-3
    w, t = initial_fields("random", n, seed=3, amplitude=0.1, theta_amplitude=theta_amplitude)
    params = SystemParams()
    worst = [0.0]

    def cb(prev, cur):
        worst[0] = max(worst[0], g_energy_balance(prev, cur, params))

    integrate(State(0.0, w, t), params, 20 * dt, dt, callback=cb)
    return worst[0]


def check_vorticity_energy_balance() -> CheckResult:
    return CheckResult("vorticity energy balance", _balance_run(0.0), 1e-6)


def check_g_energy_balance() -> CheckResult:
    return CheckResult("G energy balance", _balance_run(0.1), 1e-6)


def check_velocity_formulation() -> CheckResult:
    params = SystemParams(sigma=0.25, gamma=0.5)
    worst = 0.0
    for preset in ("taylor_green", "layered"):
        w, t = initial_fields(preset, 64)
        worst = max(worst, velocity_formulation_residual(State(0.0, w, t), params)[1])
    return CheckResult("velocity formulation", worst, 1e-9)


def check_perp_identity() -> CheckResult:
    w, t = initial_fields("random", 64, seed=5, kmax=8)
    value = perp_identity_residual(State(0.0, w, t), SystemParams(sigma=0.25, gamma=1.0))
    return CheckResult("perp identity", value, 1e-11)


def check_mean_conservation() -> CheckResult:
    w, t = initial_fields("random", 64, seed=7)
    s0 = State(0.0, w, t + 0.5)
    out = integrate(s0, SystemParams(gamma=1.0), 0.1, 1e-2)
    drift = abs(float(transform(out.theta)[0, 0].real) - 0.5)
    return CheckResult("temperature mean", drift, 1e-11)


CHECKS: tuple[Callable[[], CheckResult], ...] = (
    check_partition_of_unity,
    check_multipliers,
    check_parseval,
    check_taylor_green,
    check_vorticity_energy_balance,
    check_g_energy_balance,
    check_velocity_formulation,
    check_perp_identity,
    check_mean_conservation,
)


def run_checks() -> list[CheckResult]:
    return [c() for c in CHECKS]

"""Time integration of the generalized Boussinesq vorticity–temperature system

    ∂t ω + u·∇ω + ν Λ^α ω = ∂1 θ
    ∂t θ + u·∇θ + κ Λ^β θ = 0
    u = ∇⊥ψ,   Δψ = Λ^σ (log(I-Δ))^γ ω

with a second-order exponential time-differencing Runge–Kutta scheme
(Cox–Matthews ETD2RK).  The diagonal dissipation is applied through exact
exponentials; the advection and buoyancy terms are explicit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from .spectral import (
    Grid,
    inverse_transform,
    make_grid,
    perp_gradient_hat,
    stream_symbol,
    transform,
)


@dataclass(frozen=True)
class SystemParams:
    nu: float = 1.0
    alpha: float = 1.0
    kappa: float = 0.0
    beta: float = 1.0
    sigma: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        if self.nu < 0 or self.kappa < 0:
            raise ValueError("nu and kappa must be >= 0")
        if not (0 < self.alpha <= 1) or not (0 < self.beta <= 1):
            raise ValueError("alpha and beta must lie in (0, 1]")
        if self.sigma < 0 or self.gamma < 0:
            raise ValueError("sigma and gamma must be >= 0")

    @property
    def is_critical_boussinesq(self) -> bool:
        """ν = 1, α = 1, κ = 0: the case the G-equation is written for."""
        return self.nu == 1.0 and self.alpha == 1.0 and self.kappa == 0.0


@dataclass(frozen=True)
class NumericsParams:
    n: int = 128
    t_end: float = 1.0
    dt_max: float = 1e-2
    cfl_factor: float = 0.4
    dealias: bool = True

    def __post_init__(self):
        make_grid(self.n)
        if self.t_end <= 0 or self.dt_max <= 0 or self.cfl_factor <= 0:
            raise ValueError("t_end, dt_max and cfl_factor must be positive")


@dataclass(frozen=True)
class State:
    t: float
    omega: np.ndarray
    theta: np.ndarray

    @property
    def grid(self) -> Grid:
        return make_grid(self.omega.shape[-1])

    def with_fields(self, t: float, omega: np.ndarray, theta: np.ndarray) -> "State":
        return replace(self, t=t, omega=omega, theta=theta)


def _check_finite(*arrays: np.ndarray, where: str) -> None:
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise FloatingPointError(f"non-finite values encountered in {where}")


def _velocity_hat(wh: np.ndarray, params: SystemParams, grid: Grid) -> np.ndarray:
    return perp_gradient_hat(wh * stream_symbol(grid.n, params.sigma, params.gamma), grid)


def nonlinear_hat(
    wh: np.ndarray, th: np.ndarray, params: SystemParams, dealiased: bool = True
) -> tuple[np.ndarray, np.ndarray]:
    """Spectral (-u·∇ω + ∂1θ, -u·∇θ)."""
    g = make_grid(wh.shape[-1])
    k1, k2 = g.k_odd
    uh = _velocity_hat(wh, params, g)
    grads = np.stack([1j * k1 * wh, 1j * k2 * wh, 1j * k1 * th, 1j * k2 * th])
    if dealiased:
        mask = g.dealias_mask
        uh = uh * mask
        grads = grads * mask
    u = inverse_transform(uh)
    d = inverse_transform(grads)
    adv = np.stack([u[0] * d[0] + u[1] * d[1], u[0] * d[2] + u[1] * d[3]])
    adv_h = transform(adv)
    if dealiased:
        adv_h = adv_h * g.dealias_mask
    return -adv_h[0] + 1j * k1 * th, -adv_h[1]


def rhs_nonlinear(state: State, params: SystemParams, dealiased: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Nonlinear and buoyancy tendencies (-u·∇ω + ∂1θ, -u·∇θ) in physical space."""
    nw, nt = nonlinear_hat(transform(state.omega), transform(state.theta), params, dealiased)
    out_w, out_t = inverse_transform(nw), inverse_transform(nt)
    _check_finite(out_w, out_t, where="rhs_nonlinear")
    return out_w, out_t


def linear_rates(params: SystemParams, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal decay rates ν|k|^α and κ|k|^β (zero at k = 0)."""
    k = grid.kabs
    with np.errstate(divide="ignore"):
        lw = params.nu * np.where(k > 0, k ** params.alpha, 0.0)
        lt = params.kappa * np.where(k > 0, k ** params.beta, 0.0)
    return lw, lt


def phi1(z: np.ndarray) -> np.ndarray:
    """(e^z - 1)/z, series near 0."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-2
    zs = np.where(small, 1.0, z)
    series = 1 + z / 2 + z**2 / 6 + z**3 / 24 + z**4 / 120 + z**5 / 720
    return np.where(small, series, np.expm1(zs) / zs)


def phi2(z: np.ndarray) -> np.ndarray:
    """(e^z - 1 - z)/z², series near 0."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-2
    zs = np.where(small, 1.0, z)
    series = 0.5 + z / 6 + z**2 / 24 + z**3 / 120 + z**4 / 720 + z**5 / 5040
    return np.where(small, series, (np.expm1(zs) - zs) / (zs * zs))


@lru_cache(maxsize=32)
def _etd_coefficients(n: int, params: SystemParams, dt: float):
    g = make_grid(n)
    out = []
    for rate in linear_rates(params, g):
        z = -rate * dt
        out.append((np.exp(z), dt * phi1(z), dt * phi2(z)))
    return tuple(out)


def step_hat(
    wh: np.ndarray, th: np.ndarray, params: SystemParams, dt: float, dealiased: bool = True
) -> tuple[np.ndarray, np.ndarray]:
    """One ETD2RK step on spectral coefficients."""
    (ew, p1w, p2w), (et, p1t, p2t) = _etd_coefficients(wh.shape[-1], params, float(dt))
    nw0, nt0 = nonlinear_hat(wh, th, params, dealiased)
    aw = ew * wh + p1w * nw0
    at = et * th + p1t * nt0
    nw1, nt1 = nonlinear_hat(aw, at, params, dealiased)
    return aw + p2w * (nw1 - nw0), at + p2t * (nt1 - nt0)


def max_speed(omega: np.ndarray, params: SystemParams) -> float:
    g = make_grid(omega.shape[-1])
    u = inverse_transform(_velocity_hat(transform(omega), params, g))
    return float(np.sqrt(np.max(u[0] ** 2 + u[1] ** 2)))


def cfl_dt(state: State, params: SystemParams, numerics: NumericsParams) -> float:
    """Advective limit min(dt_max, cfl·dx / max|u|)."""
    dx = 2.0 * math.pi / state.grid.n
    return min(numerics.dt_max, numerics.cfl_factor * dx / (max_speed(state.omega, params) + 1e-12))


def step(
    state: State,
    params: SystemParams,
    numerics: NumericsParams,
    dt: float,
    check_cfl: bool = True,
) -> State:
    if dt <= 0:
        raise ValueError("dt must be positive")
    if check_cfl:
        limit = numerics.cfl_factor * (2.0 * math.pi / state.grid.n) / (max_speed(state.omega, params) + 1e-12)
        if dt > limit * (1 + 1e-12):
            raise ValueError(f"dt={dt:g} exceeds the advective CFL bound {limit:g}")
    wh, th = step_hat(transform(state.omega), transform(state.theta), params, dt, numerics.dealias)
    w, t = inverse_transform(wh), inverse_transform(th)
    _check_finite(w, t, where=f"step at t={state.t:g}")
    return state.with_fields(state.t + dt, w, t)


def integrate(
    state: State,
    params: SystemParams,
    t_end: float,
    dt: float,
    dealiased: bool = True,
    callback=None,
) -> State:
    """Fixed-step integration to ``t_end`` (last step shortened to land on it).

    Stays in spectral space between steps; ``callback(prev, new)`` sees each
    step as a pair of States.
    """
    wh, th = transform(state.omega), transform(state.theta)
    t = state.t
    nsteps = max(1, int(math.ceil((t_end - t) / dt - 1e-9)))
    prev = state
    for i in range(nsteps):
        h = dt if i < nsteps - 1 else (t_end - t)
        wh, th = step_hat(wh, th, params, h, dealiased)
        t = t + h
        if callback is not None:
            cur = State(t, inverse_transform(wh), inverse_transform(th))
            callback(prev, cur)
            prev = cur
    w, tt = inverse_transform(wh), inverse_transform(th)
    _check_finite(w, tt, where="integrate")
    return State(t, w, tt)

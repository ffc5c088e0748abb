"""Derived quantities, balances and norm monitors.

Sign convention: with [A, B] = AB - BA, the combined quantity G = ω - Rθ of
the critical system (ν = 1, α = 1, κ = 0) obeys

    ∂t G + u·∇G + ΛG = [R, u·∇]θ = R(u·∇θ) - u·∇(Rθ),

so its L² balance reads  ½ d/dt ‖G‖² + ‖Λ^{1/2}G‖² = ⟨G, [R, u·∇]θ⟩.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import astuple, dataclass, field, fields

import numpy as np

from .dynamics import State, SystemParams
from .fields import random_field
from .littlewood_paley import (
    BesovSpec,
    band_symbol,
    bernstein_ratio,
    besov_norm,
    block_norms,
    tail_mass,
)
from .spectral import (
    advect,
    curl,
    dealiased_product,
    divergence,
    grid_for,
    hdot_half_sq,
    inv_laplacian,
    inner,
    inverse_transform,
    lambda_pow,
    lp_norm,
    make_grid,
    perp_gradient_hat,
    quasi_velocity,
    riesz_x1,
    stream_symbol,
    transform,
    velocity_from_vorticity,
)


class DivergenceWarning(UserWarning):
    pass


def _same_grid(*arrays: np.ndarray) -> None:
    shapes = {a.shape[-2:] for a in arrays}
    if len(shapes) != 1:
        raise ValueError(f"fields live on different grids: {sorted(shapes)}")


def g_field(omega: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """G = ω - Rθ."""
    _same_grid(omega, theta)
    return omega - riesz_x1(theta)


def _warn_if_compressible(u: np.ndarray) -> None:
    div = divergence(u)
    scale = max(lp_norm(u, 2), np.finfo(float).tiny)
    if lp_norm(div, 2) > 1e-10 * scale:
        warnings.warn("velocity is not divergence-free", DivergenceWarning, stacklevel=3)


def commutator_R_u_grad(u: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """[R, u·∇]θ = R(u·∇θ) - u·∇(Rθ) with dealiased products."""
    _same_grid(u, theta)
    _warn_if_compressible(u)
    return riesz_x1(advect(u, theta)) - advect(u, riesz_x1(theta))


def commutator_R_u(u: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Vector [R, u]θ = R(uθ) - u Rθ, componentwise, dealiased."""
    rt = riesz_x1(theta)
    return np.stack([riesz_x1(dealiased_product(u[i], theta)) - dealiased_product(u[i], rt) for i in range(2)])


def commutator_divergence_form(u: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """∇·([R, u]θ); equals [R, u·∇]θ when ∇·u = 0."""
    return divergence(commutator_R_u(u, theta))


# -- G energy balance ------------------------------------------------------------------

@dataclass(frozen=True)
class GBalance:
    rate: float           # (E1 - E0)/dt with E = ½‖G‖²
    dissipation: float    # ‖Λ^{1/2} G_mid‖²
    production: float     # ⟨G_mid, [R, u_mid·∇]θ_mid⟩

    @property
    def residual(self) -> float:
        return abs(self.rate + self.dissipation - self.production)


def g_energy_terms(s0: State, s1: State, params: SystemParams) -> GBalance:
    if not params.is_critical_boussinesq:
        raise ValueError("the G balance holds for nu = 1, alpha = 1, kappa = 0 only")
    dt = s1.t - s0.t
    if dt <= 0:
        raise ValueError("states must be in increasing time order")
    g0 = g_field(s0.omega, s0.theta)
    g1 = g_field(s1.omega, s1.theta)
    w_mid = 0.5 * (s0.omega + s1.omega)
    t_mid = 0.5 * (s0.theta + s1.theta)
    g_mid = 0.5 * (g0 + g1)
    u_mid = _velocity(w_mid, params)
    rate = 0.5 * (inner(g1, g1) - inner(g0, g0)) / dt
    return GBalance(rate, hdot_half_sq(g_mid), inner(g_mid, commutator_R_u_grad(u_mid, t_mid)))


def g_energy_balance(s0: State, s1: State, params: SystemParams) -> float:
    """|Δ(½‖G‖²)/dt + ‖Λ^{1/2}G‖² - ⟨G, [R,u·∇]θ⟩| at the midpoint state."""
    return g_energy_terms(s0, s1, params).residual


def _velocity(omega: np.ndarray, params: SystemParams) -> np.ndarray:
    g = grid_for(omega)
    return inverse_transform(perp_gradient_hat(transform(omega) * stream_symbol(g.n, params.sigma, params.gamma), g))


# -- velocity formulation --------------------------------------------------------------

def _product(a, b, dealiased):
    return dealiased_product(a, b) if dealiased else a * b


def _grad(f):
    g = grid_for(f)
    k1, k2 = g.k_odd
    fh = transform(f)
    return inverse_transform(np.stack([1j * k1 * fh, 1j * k2 * fh]))


def _drop_mean(v: np.ndarray) -> np.ndarray:
    return v - v.mean(axis=(-2, -1), keepdims=True)


def _dissipation(f: np.ndarray, params: SystemParams) -> np.ndarray:
    return params.nu * lambda_pow(f, params.alpha)


def velocity_tendency_from_vorticity(state: State, params: SystemParams, dealiased: bool = False) -> np.ndarray:
    """∂t v = ∇⊥Δ⁻¹(∂1θ - u·∇ω - νΛ^α ω)."""
    w, th = state.omega, state.theta
    u = velocity_from_vorticity(w, params.sigma, params.gamma)
    gw = _grad(w)
    adv = _product(u[0], gw[0], dealiased) + _product(u[1], gw[1], dealiased)
    rhs = _grad(th)[0] - adv - _dissipation(w, params)
    return quasi_velocity(rhs - rhs.mean())


def pressure(state: State, params: SystemParams, dealiased: bool = False) -> np.ndarray:
    """p = -Δ⁻¹(∇·(u⊥ ∇⊥·v) - ∂2θ)."""
    u = velocity_from_vorticity(state.omega, params.sigma, params.gamma)
    v = quasi_velocity(state.omega)
    rot = curl(v)
    flux = np.stack([_product(-u[1], rot, dealiased), _product(u[0], rot, dealiased)])
    src = divergence(flux) - _grad(state.theta)[1]
    return -inv_laplacian(src - src.mean())


def velocity_nonlinear(u: np.ndarray, v: np.ndarray, dealiased: bool = False) -> np.ndarray:
    """u·∇v - Σ_j u_j ∇v_j."""
    grads = (_grad(v[0]), _grad(v[1]))
    out = []
    for i in range(2):
        conv = _product(u[0], grads[i][0], dealiased) + _product(u[1], grads[i][1], dealiased)
        lift = _product(u[0], grads[0][i], dealiased) + _product(u[1], grads[1][i], dealiased)
        out.append(conv - lift)
    return np.stack(out)


def velocity_tendency_from_momentum(state: State, params: SystemParams, dealiased: bool = False) -> np.ndarray:
    """∂t v = -(u·∇v - Σ u_j∇v_j) - νΛ^α v - ∇p + θ e2."""
    u = velocity_from_vorticity(state.omega, params.sigma, params.gamma)
    v = quasi_velocity(state.omega)
    p = pressure(state, params, dealiased)
    gp = _grad(p)
    buoy = np.stack([np.zeros_like(state.theta), state.theta])
    return -velocity_nonlinear(u, v, dealiased) - _dissipation(v, params) - gp + buoy


def velocity_formulation_residual(
    state: State, params: SystemParams, dealiased: bool = False
) -> tuple[np.ndarray, float]:
    """Difference between the two expressions for ∂t v and its L² norm.

    Both sides are compared with their spatial means removed: on the torus the
    constant mode of v is not determined by ω.  Products are taken pointwise
    (no truncation) unless ``dealiased``, so the residual measures the
    aliasing error of the momentum form and decays spectrally with n.
    """
    a = velocity_tendency_from_vorticity(state, params, dealiased)
    b = velocity_tendency_from_momentum(state, params, dealiased)
    res = _drop_mean(a - b)
    return res, lp_norm(res, 2)


def perp_identity_residual(state: State, params: SystemParams) -> float:
    """‖u⊥(∇⊥·v) - (u·∇v - Σ u_j∇v_j)‖_{L²}, pointwise products."""
    u = velocity_from_vorticity(state.omega, params.sigma, params.gamma)
    v = quasi_velocity(state.omega)
    rot = curl(v)
    lhs = np.stack([-u[1] * rot, u[0] * rot])
    return lp_norm(lhs - velocity_nonlinear(u, v), 2)


# -- theorem windows -------------------------------------------------------------------

def lq_window(sigma: float, gamma: float, q: float) -> bool:
    """Range of q for which ‖ω‖_{L^q} and the G dissipation integral are bounded."""
    if not (0 <= sigma < 0.5) or q <= 2:
        return False
    top = 4.0 / (1.0 + 2.0 * sigma)
    return q < top or (gamma == 0 and math.isclose(q, top))


def spacetime_window(sigma: float, gamma: float, q: float, s: float) -> bool:
    if not (0 <= sigma < 0.25) or s >= 1 - sigma:
        return False
    lo, hi = 2.0 / (1.0 - sigma), 4.0 / (1.0 + 2.0 * sigma)
    return lo < q < hi or (gamma == 0 and math.isclose(q, hi))


# -- norm monitors -------------------------------------------------------------------------

@dataclass
class Accumulators:
    """Running time integrals, advanced by the right-endpoint rectangle rule."""

    t_last: float | None = None
    g_dissipation: float = 0.0
    g_l2q: float = 0.0
    omega_besov: float = 0.0
    theta_besov: float = 0.0
    g_blocks: dict = field(default_factory=dict)


@dataclass(frozen=True)
class NormRow:
    t: float
    omega_l2: float
    omega_lq: float
    theta_linf: float
    theta_l2: float
    g_l2: float
    g_lq: float
    g_dissipation_integral: float
    g_l2q_integral: float
    omega_besov: float
    theta_besov: float
    g_balance_residual: float
    tail_mass: float
    omega_besov_integral: float
    theta_besov_integral: float
    g_spacetime_besov: float
    in_window: int

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def values(self) -> tuple:
        return astuple(self)


def instantaneous(state: State, params: SystemParams, q: float = 3.0) -> dict:
    """Norms that depend on the current state only."""
    w, th = state.omega, state.theta
    G = g_field(w, th)
    b_inf = BesovSpec(s=0.0, p=math.inf, q=1.0, log_gamma=params.gamma)
    return dict(
        omega_l2=lp_norm(w, 2),
        omega_lq=lp_norm(w, q),
        theta_linf=lp_norm(th, math.inf),
        theta_l2=lp_norm(th, 2),
        g_l2=lp_norm(G, 2),
        g_lq=lp_norm(G, q),
        omega_besov=besov_norm(w, b_inf),
        theta_besov=besov_norm(th, b_inf),
        tail_mass=tail_mass(np.stack([w, th])),
        g_dissipation=hdot_half_sq(G),
        g_l2q_pow=lp_norm(G, 2 * q) ** q,
        g_blocks=block_norms(G, q),
    )


def monitor_row(
    state: State,
    params: SystemParams,
    acc: Accumulators,
    q: float = 3.0,
    prev: State | None = None,
    st_s: float = 0.5,
) -> NormRow:
    """Compute one NormSeries row and advance ``acc`` to ``state.t``.

    The space-time column is ‖G‖ in L̃¹_t B^{st_s}_{q,1}; the G balance
    residual needs ``prev`` (the state one step earlier) and is NaN otherwise.
    """
    cur = instantaneous(state, params, q)
    if acc.t_last is not None:
        dt = state.t - acc.t_last
        if dt <= 0:
            raise ValueError("monitor rows must advance in time")
        acc.g_dissipation += cur["g_dissipation"] * dt
        acc.g_l2q += cur["g_l2q_pow"] * dt
        acc.omega_besov += cur["omega_besov"] * dt
        acc.theta_besov += cur["theta_besov"] * dt
        for j, v in cur["g_blocks"].items():
            acc.g_blocks[j] = acc.g_blocks.get(j, 0.0) + v * dt
    acc.t_last = state.t
    st = sum(2.0 ** (j * st_s) * v for j, v in acc.g_blocks.items())
    resid = math.nan
    if prev is not None and params.is_critical_boussinesq:
        resid = g_energy_balance(prev, state, params)
    return NormRow(
        t=state.t,
        omega_l2=cur["omega_l2"],
        omega_lq=cur["omega_lq"],
        theta_linf=cur["theta_linf"],
        theta_l2=cur["theta_l2"],
        g_l2=cur["g_l2"],
        g_lq=cur["g_lq"],
        g_dissipation_integral=acc.g_dissipation,
        g_l2q_integral=acc.g_l2q,
        omega_besov=cur["omega_besov"],
        theta_besov=cur["theta_besov"],
        g_balance_residual=resid,
        tail_mass=cur["tail_mass"],
        omega_besov_integral=acc.omega_besov,
        theta_besov_integral=acc.theta_besov,
        g_spacetime_besov=st,
        in_window=int(lq_window(params.sigma, params.gamma, q)),
    )


# -- commutator estimates --------------------------------------------------------------

def default_p3(sigma: float, s: float) -> float:
    # the small slack keeps e.g. 2/(1 - 0.95) = 40.000000000000014 from rounding up to 41
    return max(8.0, math.ceil(2.0 / (1.0 - s - sigma) - 1e-9))


def commutator_estimate_ratio(
    omega: np.ndarray,
    theta: np.ndarray,
    sigma: float,
    s: float,
    p3: float | None = None,
    gamma: float = 0.0,
) -> float:
    """‖[R,u]θ‖_{H^s} / (‖ω‖_{L²}(‖θ‖_{L^{p3}} + ‖θ‖_{L^{2/(1-σ)}})), H^s as B^s_{2,2}."""
    if not 0 <= sigma < 0.5:
        raise ValueError("sigma must lie in [0, 1/2)")
    if not 0 <= s < 1 - sigma:
        raise ValueError("s must lie in [0, 1 - sigma)")
    if p3 is None:
        p3 = default_p3(sigma, s)
    if p3 < 2.0 / (1.0 - s - sigma):
        raise ValueError(f"p3 must be >= 2/(1-s-sigma) = {2.0 / (1.0 - s - sigma):g}")
    _same_grid(omega, theta)
    den = lp_norm(omega, 2) * (lp_norm(theta, p3) + lp_norm(theta, 2.0 / (1.0 - sigma)))
    if den == 0.0:
        raise ValueError("ratio undefined: omega or theta vanishes")
    u = velocity_from_vorticity(omega, sigma, gamma)
    num = besov_norm(commutator_R_u(u, theta), BesovSpec(s=s, p=2.0, q=2.0))
    return num / den


def log_commutator_norm(
    omega: np.ndarray, theta: np.ndarray, gamma: float, q: float
) -> tuple[float, float, float]:
    """(‖[R,u·∇]θ‖_{B^0_{q,1}}, ‖ω‖_{L^q}‖θ‖_{B^{0,γ}_{∞,1}}, ratio) with σ = 0."""
    if q < 2 or gamma < 0:
        raise ValueError("need q >= 2 and gamma >= 0")
    _same_grid(omega, theta)
    den = lp_norm(omega, q) * besov_norm(theta, BesovSpec(s=0.0, p=math.inf, q=1.0, log_gamma=gamma))
    if den == 0.0:
        raise ValueError("ratio undefined: zero denominator")
    u = velocity_from_vorticity(omega, 0.0, gamma)
    num = besov_norm(commutator_R_u_grad(u, theta), BesovSpec(s=0.0, p=q, q=1.0))
    return num, den, num / den


# -- uniqueness functional ---------------------------------------------------------------

@dataclass(frozen=True)
class TwinRow:
    t: float
    theta_diff: float
    v_diff: float
    Y: float
    in_window: int

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def values(self) -> tuple:
        return astuple(self)


def uniqueness_functional(s1: State, s2: State, sigma: float = 0.0, gamma: float = 0.0) -> TwinRow:
    """Y = ‖θ1-θ2‖_{B^{-1}_{2,∞}} + ‖v1-v2‖_{B^0_{2,∞}}, v = ∇⊥Δ⁻¹ω."""
    _same_grid(s1.omega, s2.omega)
    if not math.isclose(s1.t, s2.t, rel_tol=0, abs_tol=1e-12):
        raise ValueError(f"twin states at different times {s1.t} and {s2.t}")
    dth = s1.theta - s2.theta
    dw = s1.omega - s2.omega
    # both vorticities are mean-zero; the difference of two means is roundoff
    # that would dominate a tiny difference field, so remove it here
    dv = quasi_velocity(dw - np.mean(dw))
    a = besov_norm(dth, BesovSpec(s=-1.0, p=2.0, q=math.inf))
    b = besov_norm(dv, BesovSpec(s=0.0, p=2.0, q=math.inf))
    return TwinRow(s1.t, a, b, a + b, int(sigma == 0.0))


# -- seeded ensembles -------------------------------------------------------------------

ENSEMBLE_SEED = 20260101


def ensemble_pair(n: int, i: int, kmax: int = 8, slope: float = 1.5) -> tuple[np.ndarray, np.ndarray]:
    base = ENSEMBLE_SEED + 2 * i
    return random_field(n, base, kmax, slope), random_field(n, base + 1, kmax, slope)


def commutator_ensemble_max(n: int, count: int = 100, sigma: float = 0.0, s: float = 0.5, p3: float = 8.0) -> float:
    return max(commutator_estimate_ratio(*ensemble_pair(n, i), sigma, s, p3) for i in range(count))


def log_commutator_ensemble_max(n: int, count: int = 100, gamma: float = 1.0, q: float = 3.0) -> float:
    return max(log_commutator_norm(*ensemble_pair(n, i), gamma, q)[2] for i in range(count))


def bernstein_field(n: int, j: int, i: int) -> np.ndarray:
    """Seeded field localized in block j, the same function at every n >= 64."""
    # modes up to 31 so n = 64 still represents the whole field
    kmax = min(int(math.ceil(2 ** (j + 1) * 4 / 3)), 31)
    f = random_field(n, ENSEMBLE_SEED + 1000 * (j + 1) + i, kmax, 0.0)
    g = make_grid(n)
    return inverse_transform(transform(f) * band_symbol(g.kabs, j))


def bernstein_ensemble_max(
    n: int, j_values=(1, 2, 3, 4), count: int = 100, alpha: float = 0.5, p: float = 2.0, q: float = 2.0
) -> float:
    return max(
        bernstein_ratio(bernstein_field(n, j, i), j, alpha, p, q) for j in j_values for i in range(count)
    )

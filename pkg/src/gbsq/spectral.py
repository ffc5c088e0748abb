"""Fourier machinery on the 2π-periodic square.

Fields are plain ``numpy`` arrays of shape ``(n, n)`` (scalars) or
``(2, n, n)`` (vectors).  Axis 0 is x1 and axis 1 is x2, so ``f[i, j]`` is
the sample at ``(i*dx, j*dx)``.  Spectral coefficients are the full complex
FFT divided by ``n**2`` so the k=0 coefficient equals the grid mean.

All multiplier operators send the k=0 coefficient to zero except the identity.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable

import numpy as np
import scipy.fft

TWO_PI = 2.0 * math.pi


class MeanModeWarning(UserWarning):
    """Input to an inverse-Laplacian-type operator had a non-negligible mean."""


@dataclass(frozen=True)
class Grid:
    n: int
    length: float = TWO_PI

    def __post_init__(self):
        if self.n < 8 or self.n & (self.n - 1):
            raise ValueError(f"grid size must be a power of two >= 8, got {self.n}")

    @property
    def dx(self) -> float:
        return self.length / self.n

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)

    @property
    def size(self) -> int:
        return self.n * self.n

    @cached_property
    def x(self) -> tuple[np.ndarray, np.ndarray]:
        s = np.arange(self.n) * self.dx
        return tuple(np.meshgrid(s, s, indexing="ij"))

    @cached_property
    def _k1d(self) -> np.ndarray:
        # FFT ordering with the Nyquist index carried as +n/2
        k = np.fft.fftfreq(self.n, 1.0 / self.n)
        k[self.n // 2] = self.n // 2
        return k

    @cached_property
    def k(self) -> tuple[np.ndarray, np.ndarray]:
        return tuple(np.meshgrid(self._k1d, self._k1d, indexing="ij"))

    @cached_property
    def k_odd(self) -> tuple[np.ndarray, np.ndarray]:
        """Wavenumbers for odd-order derivatives (Nyquist zeroed)."""
        k = self._k1d.copy()
        k[self.n // 2] = 0.0
        return tuple(np.meshgrid(k, k, indexing="ij"))

    @cached_property
    def ksq(self) -> np.ndarray:
        k1, k2 = self.k
        return k1 * k1 + k2 * k2

    @cached_property
    def kabs(self) -> np.ndarray:
        return np.sqrt(self.ksq)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        k1, k2 = self.k
        return np.maximum(np.abs(k1), np.abs(k2)) <= self.n / 3.0

    @cached_property
    def neg_index(self) -> tuple[np.ndarray, np.ndarray]:
        """Index arrays mapping each lattice point k to -k (mod n)."""
        i = (-np.arange(self.n)) % self.n
        return tuple(np.meshgrid(i, i, indexing="ij"))


@lru_cache(maxsize=None)
def make_grid(n: int) -> Grid:
    return Grid(int(n))


def grid_for(f: np.ndarray) -> Grid:
    n = f.shape[-1]
    if f.shape[-2] != n:
        raise ValueError(f"field must be square, got shape {f.shape}")
    return make_grid(n)


# -- transforms --------------------------------------------------------------

def transform(f: np.ndarray) -> np.ndarray:
    """Mean-normalized Fourier coefficients over the last two axes."""
    n = f.shape[-1]
    return scipy.fft.fft2(f, axes=(-2, -1)) / (n * n)


def inverse_transform(coeffs: np.ndarray) -> np.ndarray:
    n = coeffs.shape[-1]
    return scipy.fft.ifft2(coeffs * (n * n), axes=(-2, -1)).real


def parseval_residual(f: np.ndarray) -> float:
    """|mean(f^2) - sum |f_hat|^2|, relative to mean(f^2)."""
    lhs = np.mean(f * f)
    rhs = np.sum(np.abs(transform(f)) ** 2)
    return abs(lhs - rhs) / max(lhs, np.finfo(float).tiny)


# -- multipliers ---------------------------------------------------------------

@dataclass(frozen=True)
class MultiplierSymbol:
    """A Fourier multiplier ``m(k1, k2)`` evaluated on the integer lattice.

    ``rule`` receives the grid and returns the symbol array.  Keeping the grid
    in the signature lets odd symbols use the Nyquist-zeroed wavenumbers.
    """

    name: str
    rule: Callable[[Grid], np.ndarray]
    params: dict = field(default_factory=dict, compare=False)

    def evaluate(self, grid: Grid) -> np.ndarray:
        return np.broadcast_to(self.rule(grid), grid.shape)

    @classmethod
    def radial(cls, name: str, fn: Callable[[np.ndarray], np.ndarray], **params):
        """Symbol depending on |k| only."""
        return cls(name, lambda g: fn(g.kabs), params)


def _checked_symbol(m: MultiplierSymbol | np.ndarray, grid: Grid) -> np.ndarray:
    vals = m.evaluate(grid) if isinstance(m, MultiplierSymbol) else np.asarray(m)
    if not np.all(np.isfinite(vals)):
        name = getattr(m, "name", "symbol")
        raise ValueError(f"{name} is not finite on the {grid.n}x{grid.n} lattice")
    ni, nj = grid.neg_index
    mirror = np.conj(vals[ni, nj])
    scale = max(1.0, float(np.max(np.abs(vals))))
    if np.max(np.abs(vals - mirror)) > 1e-12 * scale:
        name = getattr(m, "name", "symbol")
        raise ValueError(f"{name} violates m(-k) = conj(m(k)); output would not be real")
    return vals


def apply_multiplier(f: np.ndarray, m: MultiplierSymbol | np.ndarray) -> np.ndarray:
    grid = grid_for(f)
    return inverse_transform(transform(f) * _checked_symbol(m, grid))


@lru_cache(maxsize=None)
def _lambda_symbol(n: int, s: float) -> np.ndarray:
    g = make_grid(n)
    if s == 0:
        return np.ones(g.shape)
    out = np.zeros(g.shape)
    nz = g.ksq > 0
    out[nz] = g.kabs[nz] ** s
    return out


@lru_cache(maxsize=None)
def _log_symbol(n: int, gamma: float) -> np.ndarray:
    g = make_grid(n)
    if gamma == 0:
        return np.ones(g.shape)
    return np.log1p(g.ksq) ** gamma


@lru_cache(maxsize=None)
def _riesz_symbol(n: int) -> np.ndarray:
    g = make_grid(n)
    k1, _ = g.k_odd
    out = np.zeros(g.shape, dtype=complex)
    nz = g.ksq > 0
    out[nz] = 1j * k1[nz] / g.kabs[nz]
    return out


@lru_cache(maxsize=None)
def _inv_lap_symbol(n: int) -> np.ndarray:
    g = make_grid(n)
    out = np.zeros(g.shape)
    nz = g.ksq > 0
    out[nz] = -1.0 / g.ksq[nz]
    return out


@lru_cache(maxsize=None)
def stream_symbol(n: int, sigma: float, gamma: float) -> np.ndarray:
    """Symbol of omega -> psi with  Δψ = Λ^σ (log(I-Δ))^γ ω."""
    return _inv_lap_symbol(n) * _lambda_symbol(n, sigma) * _log_symbol(n, gamma)


def lambda_symbol(s: float) -> MultiplierSymbol:
    return MultiplierSymbol("Lambda^s", lambda g: _lambda_symbol(g.n, float(s)), {"s": s})


def log_symbol(gamma: float) -> MultiplierSymbol:
    if gamma < 0:
        raise ValueError("log exponent must be >= 0")
    return MultiplierSymbol(
        "log(I-Lap)^gamma", lambda g: _log_symbol(g.n, float(gamma)), {"gamma": gamma}
    )


RIESZ_X1 = MultiplierSymbol("R", lambda g: _riesz_symbol(g.n))
INV_LAPLACIAN = MultiplierSymbol("Lap^-1", lambda g: _inv_lap_symbol(g.n))


def lambda_pow(f: np.ndarray, s: float) -> np.ndarray:
    """Λ^s f with the zero mode sent to 0 whenever s != 0."""
    return inverse_transform(transform(f) * _lambda_symbol(f.shape[-1], float(s)))


def log_laplacian_pow(f: np.ndarray, gamma: float) -> np.ndarray:
    if gamma < 0:
        raise ValueError("log exponent must be >= 0")
    return inverse_transform(transform(f) * _log_symbol(f.shape[-1], float(gamma)))


def riesz_x1(f: np.ndarray) -> np.ndarray:
    """R = Λ^{-1} ∂_{x1}, symbol i k1/|k|."""
    return inverse_transform(transform(f) * _riesz_symbol(f.shape[-1]))


def _warn_mean(fh: np.ndarray, what: str) -> None:
    mean = abs(fh[..., 0, 0])
    l2 = math.sqrt(float(np.sum(np.abs(fh) ** 2)))
    if np.any(mean > 1e-10 * max(l2, np.finfo(float).tiny)):
        warnings.warn(f"{what}: input mean is not zero; dropping it", MeanModeWarning, stacklevel=3)


def inv_laplacian(f: np.ndarray) -> np.ndarray:
    fh = transform(f)
    _warn_mean(fh, "inv_laplacian")
    return inverse_transform(fh * _inv_lap_symbol(f.shape[-1]))


# -- derivatives and vector operators ----------------------------------------------

def ddx(f: np.ndarray, axis: int) -> np.ndarray:
    g = grid_for(f)
    return inverse_transform(1j * g.k_odd[axis] * transform(f))


def gradient(f: np.ndarray) -> np.ndarray:
    g = grid_for(f)
    fh = transform(f)
    k1, k2 = g.k_odd
    return inverse_transform(np.stack([1j * k1 * fh, 1j * k2 * fh]))


def perp_gradient_hat(psi_hat: np.ndarray, grid: Grid) -> np.ndarray:
    k1, k2 = grid.k_odd
    return np.stack([-1j * k2 * psi_hat, 1j * k1 * psi_hat])


def perp_gradient(psi: np.ndarray) -> np.ndarray:
    """∇⊥ψ = (-∂2 ψ, ∂1 ψ)."""
    return inverse_transform(perp_gradient_hat(transform(psi), grid_for(psi)))


def divergence(u: np.ndarray) -> np.ndarray:
    g = grid_for(u)
    k1, k2 = g.k_odd
    uh = transform(u)
    return inverse_transform(1j * (k1 * uh[0] + k2 * uh[1]))


def curl(u: np.ndarray) -> np.ndarray:
    """∂1 u2 - ∂2 u1  (equivalently ∇⊥·u)."""
    g = grid_for(u)
    k1, k2 = g.k_odd
    uh = transform(u)
    return inverse_transform(1j * (k1 * uh[1] - k2 * uh[0]))


def velocity_from_vorticity(omega: np.ndarray, sigma: float = 0.0, gamma: float = 0.0) -> np.ndarray:
    """u = ∇⊥ Δ^{-1} Λ^σ (log(I-Δ))^γ ω."""
    if sigma < 0 or gamma < 0:
        raise ValueError("sigma and gamma must be >= 0")
    g = grid_for(omega)
    wh = transform(omega)
    _warn_mean(wh, "velocity_from_vorticity")
    psi_hat = wh * stream_symbol(g.n, float(sigma), float(gamma))
    return inverse_transform(perp_gradient_hat(psi_hat, g))


def quasi_velocity(omega: np.ndarray) -> np.ndarray:
    """v = ∇⊥ Δ^{-1} ω, the velocity with curl exactly ω."""
    return velocity_from_vorticity(omega, 0.0, 0.0)


# -- nonlinear terms -------------------------------------------------------------------

def dealias(coeffs: np.ndarray) -> np.ndarray:
    """2/3-rule truncation: zero every mode with max(|k1|,|k2|) > n/3."""
    g = grid_for(coeffs)
    return np.where(g.dealias_mask, coeffs, 0.0)


def dealiased_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a_t = inverse_transform(dealias(transform(a)))
    b_t = inverse_transform(dealias(transform(b)))
    return inverse_transform(dealias(transform(a_t * b_t)))


def advect(u: np.ndarray, f: np.ndarray, dealiased: bool = True) -> np.ndarray:
    """Pseudo-spectral u·∇f.

    With ``dealiased`` both factors and the product are truncated by the 2/3
    rule, which makes the retained modes of the product exact.
    """
    g = grid_for(f)
    k1, k2 = g.k_odd
    fh = transform(f)
    uh = transform(u)
    if dealiased:
        mask = g.dealias_mask
        fh = fh * mask
        uh = uh * mask
    grad = inverse_transform(np.stack([1j * k1 * fh, 1j * k2 * fh]))
    uu = inverse_transform(uh)
    prod = uu[0] * grad[0] + uu[1] * grad[1]
    if not dealiased:
        return prod
    return inverse_transform(transform(prod) * g.dealias_mask)


# -- norms ---------------------------------------------------------------------------

def lp_norm(f: np.ndarray, p: float) -> float:
    """L^p norm on the torus by the rectangle rule; vectors use the pointwise length.

    ``p = inf`` is the grid maximum.
    """
    f = np.asarray(f)
    g = grid_for(f)
    a = np.sqrt(np.sum(f * f, axis=0)) if f.ndim == 3 else np.abs(f)
    if math.isinf(p):
        return float(np.max(a))
    if p == 2:
        return math.sqrt(float(np.sum(a * a)) * g.dx * g.dx)
    return float(np.sum(a ** p) * g.dx * g.dx) ** (1.0 / p)


def inner(f: np.ndarray, h: np.ndarray) -> float:
    """∫ f h dx over the torus (summed over vector components)."""
    g = grid_for(f)
    return float(np.sum(f * h)) * g.dx * g.dx


def hdot_half_sq(f: np.ndarray) -> float:
    """‖Λ^{1/2} f‖²_{L²} computed in spectral space."""
    g = grid_for(f)
    fh = transform(f)
    return float(np.sum(g.kabs * np.abs(fh) ** 2)) * g.length ** 2

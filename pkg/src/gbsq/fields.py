"""Seeded random fields and initial-data presets.

Randomness comes from SplitMix64 so the same seed gives the same field in any
language.  A random band-limited field draws, for every mode k of the
half-lattice in the canonical order

    for k1 in 0..kmax, for k2 in -kmax..kmax,
        keep if (k1 > 0 or k2 > 0) and k1² + k2² <= kmax²

two uniforms u1, u2 = (next() >> 11) * 2^-53 and sets

    c_k = |k|^(-slope) * sqrt(-2 log(1 - u1)) * exp(2πi u2),   c_{-k} = conj(c_k).

The field is then rescaled to the requested root-mean-square value.  Because
the coefficients do not depend on n, the same seed describes the same
function at every resolution with n/2 > kmax.
"""

from __future__ import annotations

import math

import numpy as np

from .spectral import Grid, inverse_transform, make_grid

MASK64 = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Double in [0, 1)."""
        return (self.next() >> 11) * 2.0 ** -53


def half_lattice(kmax: int) -> list[tuple[int, int]]:
    modes = []
    for k1 in range(0, kmax + 1):
        for k2 in range(-kmax, kmax + 1):
            if (k1 > 0 or k2 > 0) and k1 * k1 + k2 * k2 <= kmax * kmax:
                modes.append((k1, k2))
    return modes


def random_coefficients(seed: int, kmax: int, slope: float) -> dict[tuple[int, int], complex]:
    rng = SplitMix64(seed)
    out = {}
    for k1, k2 in half_lattice(kmax):
        u1 = rng.uniform()
        u2 = rng.uniform()
        amp = math.hypot(k1, k2) ** (-slope) * math.sqrt(-2.0 * math.log(1.0 - u1))
        out[(k1, k2)] = amp * complex(math.cos(2 * math.pi * u2), math.sin(2 * math.pi * u2))
    return out


def synthesize(grid: Grid, coeffs: dict[tuple[int, int], complex]) -> np.ndarray:
    """Real field sum_k c_k e^{ik·x} from half-lattice coefficients."""
    n = grid.n
    fh = np.zeros(grid.shape, dtype=complex)
    for (k1, k2), c in coeffs.items():
        if max(abs(k1), abs(k2)) >= n // 2:
            raise ValueError(f"mode {(k1, k2)} is not representable on an n={n} grid")
        fh[k1 % n, k2 % n] += c
        fh[-k1 % n, -k2 % n] += c.conjugate()
    return inverse_transform(fh)


def random_field(n: int, seed: int, kmax: int = 8, slope: float = 2.0, rms: float = 1.0) -> np.ndarray:
    """Mean-zero band-limited field with the given rms, identical across resolutions."""
    f = synthesize(make_grid(n), random_coefficients(seed, kmax, slope))
    cur = math.sqrt(float(np.mean(f * f)))
    return f * (rms / cur) if cur > 0 else f


def gaussian_blob(n: int, width: float = 0.5, center: tuple[float, float] = (math.pi, math.pi)) -> np.ndarray:
    """Periodized Gaussian bump of unit height, peaked at ``center``."""
    g = make_grid(n)
    x1, x2 = g.x
    d1 = np.angle(np.exp(1j * (x1 - center[0])))
    d2 = np.angle(np.exp(1j * (x2 - center[1])))
    return np.exp(-(d1 * d1 + d2 * d2) / (2.0 * width * width))


PRESETS = ("taylor_green", "layered", "random", "blob", "zero")


def initial_fields(
    preset: str,
    n: int,
    *,
    seed: int = 0,
    amplitude: float = 1.0,
    theta_amplitude: float = 1.0,
    kmax: int = 8,
    spectral_slope: float = 2.0,
    blob_width: float = 0.5,
) -> tuple[np.ndarray, np.ndarray]:
    """(omega0, theta0) for a named preset.

    ``random`` uses ``seed`` for omega and ``seed + 1`` for theta; ``blob``
    pairs a unit temperature bump at (π, π) with random vorticity.
    """
    g = make_grid(n)
    x1, x2 = g.x
    zero = np.zeros(g.shape)
    if preset == "taylor_green":
        return amplitude * np.sin(x1) * np.sin(x2), zero
    if preset == "layered":
        return zero, theta_amplitude * (np.sin(x2) + 0.5 * np.cos(2 * x2))
    if preset == "random":
        w = random_field(n, seed, kmax, spectral_slope, amplitude) if amplitude else zero
        t = random_field(n, seed + 1, kmax, spectral_slope, theta_amplitude) if theta_amplitude else zero
        return w, t
    if preset == "blob":
        w = random_field(n, seed, kmax, spectral_slope, amplitude) if amplitude else zero
        return w, theta_amplitude * gaussian_blob(n, blob_width)
    if preset == "zero":
        return zero, zero.copy()
    raise ValueError(f"unknown preset {preset!r}; expected one of {PRESETS}")

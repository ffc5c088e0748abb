"""Dyadic Littlewood–Paley blocks and Besov-type norms on the torus.

The low-pass symbol is

    chi(ξ) = 1 - t((|ξ| - 3/4) / (4/3 - 3/4)),   t(x) = g(x) / (g(x) + g(1-x)),
    g(x) = exp(-1/x) for x > 0 else 0,

and the band symbols are ``phi_j(ξ) = chi(2^{-j-1} ξ) - chi(2^{-j} ξ)``, so
``chi + phi_0 + ... + phi_J = chi(2^{-J-1} ξ)`` telescopes exactly.  Each
``phi_j`` is supported in ``3/4 * 2^j < |ξ| < 8/3 * 2^j``.

Blocks run over j = -1 (low pass) .. j_max, with j_max the largest index
satisfying ``2^{j_max+1} <= n/2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache
from typing import Sequence

import numpy as np

from .spectral import Grid, grid_for, inverse_transform, lp_norm, make_grid, transform

CHI_INNER = 3.0 / 4.0
CHI_OUTER = 4.0 / 3.0


def smooth_step(x: np.ndarray) -> np.ndarray:
    """C^∞ step: 0 for x <= 0, 1 for x >= 1."""
    x = np.asarray(x, dtype=float)

    def g(y):
        out = np.zeros_like(y)
        pos = y > 0
        out[pos] = np.exp(-1.0 / y[pos])
        return out

    a = g(x)
    b = g(1.0 - x)
    return a / (a + b)


def low_pass_symbol(r: np.ndarray) -> np.ndarray:
    """chi as a function of |ξ|."""
    return 1.0 - smooth_step((np.asarray(r, dtype=float) - CHI_INNER) / (CHI_OUTER - CHI_INNER))


def band_symbol(r: np.ndarray, j: int) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return low_pass_symbol(r * 2.0 ** (-j - 1)) - low_pass_symbol(r * 2.0 ** (-j))


def band_support(j: int) -> tuple[float, float]:
    """Open interval of |ξ| on which block j can be nonzero."""
    if j == -1:
        return (0.0, CHI_OUTER)
    return (CHI_INNER * 2.0 ** j, 2.0 * CHI_OUTER * 2.0 ** j)


@dataclass(frozen=True)
class DyadicPartition:
    grid: Grid

    @property
    def j_max(self) -> int:
        return int(math.log2(self.grid.n // 2)) - 1

    @property
    def indices(self) -> range:
        return range(-1, self.j_max + 1)

    @cached_property
    def chi(self) -> np.ndarray:
        return low_pass_symbol(self.grid.kabs)

    @cached_property
    def phi(self) -> tuple[np.ndarray, ...]:
        return tuple(band_symbol(self.grid.kabs, j) for j in range(self.j_max + 1))

    def symbol(self, j: int) -> np.ndarray:
        if j < -1 or j > self.j_max:
            raise ValueError(f"block index {j} outside -1..{self.j_max} for n={self.grid.n}")
        return self.chi if j == -1 else self.phi[j]

    @cached_property
    def covered_radius(self) -> float:
        """Frequencies with |ξ| below this are reconstructed exactly by the blocks."""
        return 2.0 ** self.j_max

    def unity_deviation(self) -> float:
        total = self.chi + sum(self.phi)
        inside = self.grid.kabs <= self.covered_radius
        return float(np.max(np.abs(total[inside] - 1.0)))


@lru_cache(maxsize=None)
def _partition(n: int) -> DyadicPartition:
    return DyadicPartition(make_grid(n))


def make_partition(grid: Grid | int) -> DyadicPartition:
    return _partition(grid if isinstance(grid, int) else grid.n)


def lp_block(f: np.ndarray, j: int) -> np.ndarray:
    part = make_partition(grid_for(f))
    return inverse_transform(transform(f) * part.symbol(j))


def lp_blocks(f: np.ndarray) -> dict[int, np.ndarray]:
    """All blocks j = -1..j_max from a single forward transform."""
    part = make_partition(grid_for(f))
    fh = transform(f)
    return {j: inverse_transform(fh * part.symbol(j)) for j in part.indices}


def partial_sum(f: np.ndarray, j: int) -> np.ndarray:
    """S_j f = sum of blocks -1..j-1 (j may be j_max + 1)."""
    part = make_partition(grid_for(f))
    if j < -1 or j > part.j_max + 1:
        raise ValueError(f"partial sum index {j} outside -1..{part.j_max + 1}")
    fh = transform(f)
    sym = np.zeros(part.grid.shape)
    for k in range(-1, j):
        sym = sym + part.symbol(k)
    return inverse_transform(fh * sym)


def tail_mass(f: np.ndarray) -> float:
    """Fraction of the L² energy sitting outside the exactly-covered disc."""
    part = make_partition(grid_for(f))
    e = np.abs(transform(f)) ** 2
    if e.ndim == 3:
        e = e.sum(axis=0)
    total = float(e.sum())
    if total == 0.0:
        return 0.0
    return float(e[part.grid.kabs > part.covered_radius].sum()) / total


@dataclass(frozen=True)
class BesovSpec:
    """Parameters of ‖2^{js} (1+|j|)^γ ‖Δ_j f‖_{L^p}‖_{l^q}."""

    s: float = 0.0
    p: float = 2.0
    q: float = 2.0
    log_gamma: float = 0.0
    homogeneous: bool = False

    def __post_init__(self):
        for name in ("p", "q"):
            v = getattr(self, name)
            if not (v >= 1.0):
                raise ValueError(f"{name} must lie in [1, inf], got {v}")
        if self.log_gamma < 0:
            raise ValueError("log weight exponent must be >= 0")

    def weight(self, j: int) -> float:
        return 2.0 ** (j * self.s) * (1.0 + abs(j)) ** self.log_gamma

    def block_indices(self, part: DyadicPartition) -> range:
        return range(0, part.j_max + 1) if self.homogeneous else part.indices


def sequence_norm(values: Sequence[float], q: float) -> float:
    a = np.asarray(values, dtype=float)
    if a.size == 0:
        return 0.0
    if math.isinf(q):
        return float(np.max(a))
    if q == 1:
        return float(np.sum(a))
    return float(np.sum(a ** q)) ** (1.0 / q)


def block_norms(f: np.ndarray, p: float) -> dict[int, float]:
    return {j: lp_norm(b, p) for j, b in lp_blocks(f).items()}


def besov_norm(f: np.ndarray, spec: BesovSpec) -> float:
    """Truncated (generalized) Besov norm; works for scalar and vector fields."""
    part = make_partition(grid_for(f))
    norms = block_norms(f, spec.p)
    return sequence_norm([spec.weight(j) * norms[j] for j in spec.block_indices(part)], spec.q)


def time_norm(values: np.ndarray, times: np.ndarray, r: float) -> float:
    """Left-rectangle L^r over the schedule ``times``; r = inf is the sample max."""
    if math.isinf(r):
        return float(np.max(values))
    dt = np.diff(times)
    return float(np.sum(values[:-1] ** r * dt)) ** (1.0 / r)


def spacetime_besov_norm(
    fields: Sequence[np.ndarray], times: Sequence[float], spec: BesovSpec, r: float = 1.0
) -> float:
    """‖2^{js}(1+|j|)^γ ‖Δ_j f‖_{L^r_t L^p}‖_{l^q} from time samples."""
    times = np.asarray(times, dtype=float)
    if len(fields) < 2 or len(fields) != len(times):
        raise ValueError("need at least two time samples, one per field")
    if np.any(np.diff(times) <= 0):
        raise ValueError("sample times must be strictly increasing")
    if not r >= 1.0:
        raise ValueError("time exponent must lie in [1, inf]")
    part = make_partition(grid_for(fields[0]))
    idx = list(spec.block_indices(part))
    table = np.array([[block_norms(f, spec.p)[j] for j in idx] for f in fields])
    per_block = [spec.weight(j) * time_norm(table[:, c], times, r) for c, j in enumerate(idx)]
    return sequence_norm(per_block, spec.q)


def bernstein_ratio(f: np.ndarray, j: int, alpha: float, p: float, q: float) -> float:
    """‖(-Δ)^α f‖_{L^q} / (2^{2αj + 2j(1/p - 1/q)} ‖f‖_{L^p}) for block-localized f."""
    g = grid_for(f)
    fh = transform(f)
    total = float(np.sum(np.abs(fh) ** 2))
    if total == 0.0:
        raise ValueError("Bernstein ratio of the zero field is undefined")
    lo, hi = band_support(j)
    outside = (g.kabs <= lo) | (g.kabs >= hi)
    if float(np.sum(np.abs(fh[outside]) ** 2)) > 1e-20 * total:
        raise ValueError(f"field is not localized in the support of block {j}")
    sym = np.where(g.ksq > 0, g.kabs ** (2.0 * alpha), 0.0) if alpha else 1.0
    lhs = lp_norm(inverse_transform(fh * sym), q)
    inv_p = 0.0 if math.isinf(p) else 1.0 / p
    inv_q = 0.0 if math.isinf(q) else 1.0 / q
    scale = 2.0 ** (2.0 * alpha * j + 2.0 * j * (inv_p - inv_q))
    return lhs / (scale * lp_norm(f, p))

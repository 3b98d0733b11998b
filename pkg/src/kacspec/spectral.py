"""Frequency grids, spectral states, mollifier symbols and weighted norms.

Everything here lives on the half line ``xi >= 0``. States are even in
``xi`` (radially symmetric, real densities), so the negative half is never
stored; odd intermediates (transforms of ``v * g``) carry an explicit parity.

Conventions used throughout the package::

    f_hat(xi) = int exp(-i v xi) f(v) dv
    ||f||_{L^2}^2 = (1 / 2 pi) int |f_hat(xi)|^2 dxi
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np

ANGLE_MAPS = ("full_angle", "half_angle")


@dataclass(frozen=True)
class FourierGrid:
    xi_max: float
    n_points: int

    def __post_init__(self):
        if not self.xi_max > 0:
            raise ValueError(f"xi_max must be positive, got {self.xi_max}")
        if self.n_points < 9:
            raise ValueError(f"n_points must be >= 9 for the 5-point stencils, got {self.n_points}")

    @property
    def spacing(self) -> float:
        return self.xi_max / (self.n_points - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.xi_max, self.n_points)


@dataclass(frozen=True)
class SpectralState:
    """Samples of the even, real transform ``f_hat(t, xi_j)`` on ``xi_j >= 0``."""

    grid: FourierGrid
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64)
        if vals.shape != (self.grid.n_points,):
            raise ValueError(f"values has shape {vals.shape}, grid needs ({self.grid.n_points},)")
        if not np.all(np.isfinite(vals)):
            raise ValueError("state values must be finite")
        if self.time < 0:
            raise ValueError("time must be nonnegative")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_function(cls, grid: FourierGrid, fn, time: float = 0.0) -> "SpectralState":
        return cls(grid, np.asarray(fn(grid.nodes), dtype=np.float64), time)

    def with_values(self, values, time: Optional[float] = None) -> "SpectralState":
        return SpectralState(self.grid, values, self.time if time is None else time)

    def is_monotone_bounded(self, tol: float = 1e-12) -> bool:
        """``|f_hat(xi)| <= f_hat(0)``, which holds for any nonnegative density."""
        return bool(np.all(np.abs(self.values) <= self.values[0] + tol))


@dataclass(frozen=True)
class CrossSectionParams:
    s: float
    b0: float = 1.0
    angle_map: str = "full_angle"
    theta_cut: float = 1e-4

    def __post_init__(self):
        if not 0.0 < self.s < 1.0:
            raise ValueError(f"singularity exponent must satisfy 0 < s < 1, got s={self.s}")
        if not self.b0 > 0:
            raise ValueError(f"b0 must be positive, got {self.b0}")
        if self.angle_map not in ANGLE_MAPS:
            raise ValueError(f"angle_map must be one of {ANGLE_MAPS}, got {self.angle_map!r}")
        if not 0.0 < self.theta_cut < np.pi / 8:
            raise ValueError(f"theta_cut must lie in (0, pi/8), got {self.theta_cut}")


@dataclass(frozen=True)
class ExpMollifierParams:
    c0: float
    alpha: float = 1.0
    delta: float = 0.5

    def __post_init__(self):
        if not self.c0 > 0:
            raise ValueError("c0 must be positive")
        if not 0.0 < self.alpha < 2.0:
            raise ValueError("alpha must lie in (0, 2)")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")


@dataclass(frozen=True)
class PolyMollifierParams:
    N: float
    T0: float
    delta: float = 0.5
    N0: float = field(init=False)

    def __post_init__(self):
        if not self.N > 0 or not self.T0 > 0:
            raise ValueError("N and T0 must be positive")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        object.__setattr__(self, "N0", (self.T0 * self.N + 4.0) / 2.0)


@dataclass(frozen=True)
class WeightedNormSpec:
    sobolev_index: float = 0.0
    weight_power: int = 0

    def __post_init__(self):
        if self.sobolev_index < 0:
            raise ValueError("sobolev_index must be >= 0")
        if self.weight_power not in (0, 1, 2):
            raise ValueError(f"weight_power must be 0, 1 or 2, got {self.weight_power}")


MollifierSpec = Tuple[str, Union[ExpMollifierParams, PolyMollifierParams], float]


def japanese(xi):
    return np.sqrt(1.0 + np.square(xi))


# --- mollifiers -------------------------------------------------------------

def _g_exponent(t, xi, p: ExpMollifierParams):
    return p.c0 * t * japanese(xi) ** p.alpha


def g_delta(t, xi, p: ExpMollifierParams):
    """Exponential mollifier ``e^a / (1 + delta e^a)``, ``a = c0 t <xi>^alpha``.

    Written as ``1 / (e^-a + delta)`` so it saturates at ``1/delta`` without
    overflowing.
    """
    a = _g_exponent(t, xi, p)
    return 1.0 / (np.exp(-a) + p.delta)


def _g_damping(t, xi, p):
    # 1 / (1 + delta e^a), evaluated without overflow
    a = _g_exponent(t, xi, p)
    e = np.exp(-a)
    return e / (e + p.delta)


def g_delta_dt(t, xi, p: ExpMollifierParams):
    return p.c0 * japanese(xi) ** p.alpha * g_delta(t, xi, p) * _g_damping(t, xi, p)


def g_delta_dxi(t, xi, p: ExpMollifierParams):
    xi = np.asarray(xi, dtype=float)
    return (p.alpha * p.c0 * t * xi * (1.0 + xi * xi) ** (p.alpha / 2 - 1)
            * g_delta(t, xi, p) * _g_damping(t, xi, p))


def m_delta(t, xi, p: PolyMollifierParams):
    """Polynomial mollifier ``<xi>^(N t - 1) / (1 + delta xi^2)^N0`` for ``0 <= t <= T0``."""
    if np.any(np.asarray(t) > p.T0) or np.any(np.asarray(t) < 0):
        raise ValueError(f"polynomial mollifier is defined for 0 <= t <= T0={p.T0}")
    xi = np.asarray(xi, dtype=float)
    log_m = 0.5 * (p.N * t - 1.0) * np.log1p(xi * xi) - p.N0 * np.log1p(p.delta * xi * xi)
    return np.exp(log_m)


def m_delta_dt(t, xi, p: PolyMollifierParams):
    xi = np.asarray(xi, dtype=float)
    return 0.5 * p.N * np.log1p(xi * xi) * m_delta(t, xi, p)


def mollifier_symbol(mollifier: Optional[MollifierSpec], xi):
    if mollifier is None:
        return np.ones_like(np.asarray(xi, dtype=float))
    kind, params, t = mollifier
    if kind == "exp":
        return g_delta(t, xi, params)
    if kind == "poly":
        return m_delta(t, xi, params)
    raise ValueError(f"unknown mollifier kind {kind!r}")


# --- finite differences on the half grid ------------------------------------

def xi_derivative(values, h: float, parity: int = 1, order: int = 1) -> np.ndarray:
    """Fourth-order finite-difference derivative on ``[0, Xi]``.

    The left boundary uses ghost values from the reflection ``u(-xi) =
    parity * u(xi)``; the right boundary uses one-sided stencils.
    """
    u = np.asarray(values, dtype=float)
    n = u.size
    if n < 6:
        raise ValueError("grid too coarse for the derivative stencil")
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    ext = np.empty(n + 2)
    ext[2:] = u
    ext[1] = parity * u[1]
    ext[0] = parity * u[2]
    out = np.empty(n)
    if order == 1:
        c = ext  # ext[i + 2] == u[i]
        out[: n - 2] = (c[0:n - 2] - 8 * c[1:n - 1] + 8 * c[3:n + 1] - c[4:n + 2]) / (12 * h)
        out[n - 1] = (25 * u[-1] - 48 * u[-2] + 36 * u[-3] - 16 * u[-4] + 3 * u[-5]) / (12 * h)
        out[n - 2] = (3 * u[-1] + 10 * u[-2] - 18 * u[-3] + 6 * u[-4] - u[-5]) / (12 * h)
    else:
        c = ext
        out[: n - 2] = (-c[0:n - 2] + 16 * c[1:n - 1] - 30 * c[2:n] + 16 * c[3:n + 1]
                        - c[4:n + 2]) / (12 * h * h)
        out[n - 1] = (45 * u[-1] - 154 * u[-2] + 214 * u[-3] - 156 * u[-4] + 61 * u[-5]
                      - 10 * u[-6]) / (12 * h * h)
        out[n - 2] = (10 * u[-1] - 15 * u[-2] - 4 * u[-3] + 14 * u[-4] - 6 * u[-5]
                      + u[-6]) / (12 * h * h)
    if parity == -1 and order == 2:
        out[0] = 0.0
    if parity == 1 and order == 1:
        out[0] = 0.0
    return out


# --- norms -----------------------------------------------------------------

def sobolev_sq(values, grid: FourierGrid, k: float = 0.0) -> float:
    """``||g||_{H^k}^2`` from half-grid samples of ``g_hat`` (either parity)."""
    xi = grid.nodes
    integrand = japanese(xi) ** (2 * k) * np.abs(np.asarray(values)) ** 2
    return float(np.trapezoid(integrand, xi) / np.pi)


def weighted_sobolev_sq(values, grid: FourierGrid, k: float, ell: int, parity: int = 1) -> float:
    """``||<v>^ell g||_{H^k}^2`` using ``F(v g) = i d/dxi g_hat``."""
    if ell not in (0, 1, 2):
        raise ValueError(f"weight power must be 0, 1 or 2, got {ell}")
    total = sobolev_sq(values, grid, k)
    if ell == 0:
        return total
    d1 = xi_derivative(values, grid.spacing, parity, 1)
    if ell == 1:
        return total + sobolev_sq(d1, grid, k)
    d2 = xi_derivative(values, grid.spacing, parity, 2)
    return total + 2 * sobolev_sq(d1, grid, k) + sobolev_sq(d2, grid, k)


def weighted_norm(state: SpectralState, spec: WeightedNormSpec,
                  mollifier: Optional[MollifierSpec] = None) -> float:
    """``||<v>^l W g||_{H^k}`` where ``W`` is an optional mollifier symbol."""
    vals = state.values * mollifier_symbol(mollifier, state.grid.nodes)
    return float(np.sqrt(weighted_sobolev_sq(vals, state.grid, spec.sobolev_index,
                                             spec.weight_power)))


def conserved_quantities(state: SpectralState) -> Tuple[float, float]:
    """Mass ``f_hat(0)`` and energy ``-f_hat''(0)`` (5-point even stencil)."""
    u = state.values
    h = state.grid.spacing
    second = (-2 * u[2] + 32 * u[1] - 30 * u[0]) / (12 * h * h)
    return float(u[0]), float(-second)

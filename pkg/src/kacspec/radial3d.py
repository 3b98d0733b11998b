"""Radial 3D data and kernels reduced to the 1D Kac setting, and back."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .collision import FourierInterpolant
from .spectral import SpectralState, japanese

TAIL_FLOOR = 1e-10


@dataclass(frozen=True)
class RadialProfile3D:
    """``f(v) = phi(|v|)`` sampled on a uniform grid over ``[0, R]``."""

    r_grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        r = np.array(self.r_grid, dtype=float)
        phi = np.array(self.values, dtype=float)
        if r.ndim != 1 or r.shape != phi.shape or r.size < 3:
            raise ValueError("r_grid and values must be 1D arrays of equal length >= 3")
        if r[0] != 0.0:
            raise ValueError("r_grid must start at 0")
        d = np.diff(r)
        if np.any(d <= 0) or not np.allclose(d, d[0], rtol=1e-9, atol=0):
            raise ValueError("r_grid must be uniform and increasing")
        if np.any(phi < 0):
            raise ValueError("radial profile must be nonnegative")
        if abs(phi[-1]) > TAIL_FLOOR * max(float(phi.max()), 1e-300):
            raise ValueError("profile is not negligible at r = R; enlarge the radial grid")
        r.setflags(write=False)
        phi.setflags(write=False)
        object.__setattr__(self, "r_grid", r)
        object.__setattr__(self, "values", phi)

    @classmethod
    def from_function(cls, fn, R: float, n: int) -> "RadialProfile3D":
        r = np.linspace(0.0, R, n)
        return cls(r, fn(r))

    @property
    def R(self) -> float:
        return float(self.r_grid[-1])

    @property
    def spacing(self) -> float:
        return float(self.r_grid[1] - self.r_grid[0])

    def _segments(self, per_interval: int = 8):
        # Gauss-Legendre points on every grid interval and the linear
        # interpolant of g = r phi there; reduce_profile integrates the same g
        x, w = np.polynomial.legendre.leggauss(per_interval)
        r, h = self.r_grid, self.spacing
        pts = (r[:-1, None] + 0.5 * h * (x[None, :] + 1.0)).ravel()
        wts = np.tile(0.5 * h * w, r.size - 1)
        return pts, wts, np.interp(pts, r, self.values * r)

    def mass(self) -> float:
        """``4 pi int phi r^2 dr``."""
        return self.moment(0.0)

    def moment(self, k: float) -> float:
        """``int |v|^k f dv``.

        Masses, moments and the transform integrate the piecewise-linear
        interpolant of ``r phi(r)`` exactly (up to Gauss-Legendre error for
        non-integer ``k``), which is the representation the reduction uses, so
        the reduction identities hold to round-off.
        """
        pts, wts, g = self._segments()
        return float(4.0 * np.pi * np.sum(wts * g * pts ** (1 + k)))

    def weighted_mass(self, k: float) -> float:
        """``int <v>^k f dv``."""
        pts, wts, g = self._segments()
        return float(4.0 * np.pi * np.sum(wts * g * pts * japanese(pts) ** k))

    def transform(self, xi) -> np.ndarray:
        """3D radial transform ``4 pi int phi(r) r^2 sinc(|xi| r) dr``."""
        xi = np.atleast_1d(np.abs(np.asarray(xi, dtype=float)))
        pts, wts, g = self._segments()
        kern = np.sinc(np.outer(xi, pts) / np.pi)
        return 4.0 * np.pi * kern @ (wts * g * pts)


def uniform_ball_profile(R0: float, R: float, n: int, mass: float = 1.0) -> RadialProfile3D:
    """Uniform ball of radius ``R0`` on ``n`` nodes spanning about ``[0, R]``.

    The spacing is adjusted so ``R0`` falls at the midpoint of a grid interval,
    where the linear interpolant's error over the jump is second order; the
    grid end moves to ``(n - 1) h``.
    """
    if not 0 < R0 < R:
        raise ValueError("need 0 < R0 < R")
    k = max(1, int(np.floor(R0 * (n - 1) / R)))
    h = R0 / (k + 0.5)
    if (n - 1) * h < R0 + 2 * h:
        raise ValueError("grid too short to hold the ball")
    r = h * np.arange(n)
    rho = mass / (4.0 / 3.0 * np.pi * R0 ** 3)
    return RadialProfile3D(r, np.where(r < R0, rho, 0.0))


def marginal_moment(prof: RadialProfile3D, k: float, u_grid=None) -> float:
    """``int_R u^k F(u) du`` of the marginal (both signs of ``u``).

    ``F`` is integrated exactly on the profile grid (it is piecewise quadratic
    there), unless an explicit ``u_grid`` asks for the trapezoid rule on it.
    """
    if u_grid is not None:
        u = np.asarray(u_grid, dtype=float)
        return float(2.0 * np.trapezoid(u ** k * reduce_profile(prof, u), u))
    pts, wts, _ = prof._segments()
    return float(2.0 * np.sum(wts * pts ** k * reduce_profile(prof, pts)))


def marginal_transform(prof: RadialProfile3D, xi) -> np.ndarray:
    """1D transform ``2 int_0^R F(u) cos(xi u) du`` of the marginal."""
    xi = np.atleast_1d(np.abs(np.asarray(xi, dtype=float)))
    pts, wts, _ = prof._segments()
    return 2.0 * np.cos(np.outer(xi, pts)) @ (wts * reduce_profile(prof, pts))


def reduce_profile(prof: RadialProfile3D, u_grid) -> np.ndarray:
    """Marginal ``F(u) = 2 pi int_{|u|}^R phi(r) r dr``.

    Trapezoid over the profile grid; when ``|u|`` falls between nodes the
    partial first segment uses the linear interpolant of ``r phi``.
    """
    u = np.abs(np.asarray(u_grid, dtype=float))
    if np.any(u > prof.R * (1 + 1e-12)):
        raise ValueError(f"u_grid exceeds the profile radius R={prof.R}")
    r, h = prof.r_grid, prof.spacing
    g = prof.values * r
    seg = 0.5 * h * (g[1:] + g[:-1])
    tail = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])  # int_{r_i}^R
    i = np.minimum((u / h).astype(np.int64), r.size - 1)
    frac = u - r[i]
    nxt = np.minimum(i + 1, r.size - 1)
    g_u = g[i] + (g[nxt] - g[i]) * frac / h
    partial = np.where(i < r.size - 1, 0.5 * (h - frac) * (g_u + g[nxt]), 0.0)
    return 2.0 * np.pi * (tail[nxt] * (i < r.size - 1) + partial)


@dataclass(frozen=True)
class Kernel3D:
    """Angular kernel ``b(cos theta)``.

    ``b_of_theta`` evaluates the same function in terms of ``theta`` directly,
    which avoids forming ``1 - cos theta`` for tiny angles.
    """

    b: Callable
    b_of_theta: Optional[Callable] = None

    def __post_init__(self):
        probe = np.linspace(1e-3, np.pi / 2, 64)
        vals = self.eval_theta(probe)
        if np.any(vals < 0) or not np.all(np.isfinite(vals)):
            raise ValueError("kernel b must be finite and nonnegative on (0, pi/2]")

    def eval_theta(self, theta):
        theta = np.asarray(theta, dtype=float)
        if self.b_of_theta is not None:
            return np.asarray(self.b_of_theta(theta), dtype=float)
        return np.asarray(self.b(np.cos(theta)), dtype=float)

    @classmethod
    def constant(cls, c: float) -> "Kernel3D":
        return cls(lambda x: np.full_like(np.asarray(x, dtype=float), c),
                   lambda th: np.full_like(np.asarray(th, dtype=float), c))

    @classmethod
    def power_law(cls, s: float, b0: float = 1.0) -> "Kernel3D":
        """``b = b0 / sin(theta)^(2 + 2s)``, i.e. ``b0 (1 - x^2)^(-1 - s)``."""
        if not 0 < s < 1:
            raise ValueError("s must lie in (0, 1)")
        return cls(lambda x: b0 * (1.0 - np.square(x)) ** (-1.0 - s),
                   lambda th: b0 * np.abs(np.sin(th)) ** (-2.0 - 2.0 * s))

    @classmethod
    def tabulated(cls, theta, b_values) -> "Kernel3D":
        """Table over ``theta`` in ``(0, pi/2]``, interpolated linearly in
        ``log b`` against ``log theta`` (exact for power laws)."""
        th = np.asarray(theta, dtype=float)
        bv = np.asarray(b_values, dtype=float)
        if np.any(th <= 0) or np.any(np.diff(th) <= 0) or np.any(bv <= 0):
            raise ValueError("table needs increasing positive angles and positive b")
        lt, lb = np.log(th), np.log(bv)

        def b_theta(x):
            lx = np.log(np.asarray(x, dtype=float))
            # linear extrapolation in log-log beyond the table ends
            slope_lo = (lb[1] - lb[0]) / (lt[1] - lt[0])
            slope_hi = (lb[-1] - lb[-2]) / (lt[-1] - lt[-2])
            out = np.interp(lx, lt, lb)
            out = np.where(lx < lt[0], lb[0] + slope_lo * (lx - lt[0]), out)
            out = np.where(lx > lt[-1], lb[-1] + slope_hi * (lx - lt[-1]), out)
            return np.exp(out)

        return cls(lambda x: b_theta(np.arccos(np.clip(x, -1.0, 1.0))), b_theta)


def kernel_3d_to_1d(k: Kernel3D) -> Callable:
    """``beta(theta) = 2 pi |sin theta| b(cos theta)``, even in ``theta``.

    Use with ``angle_map='half_angle'``.
    """
    def beta3(theta):
        th = np.abs(np.asarray(theta, dtype=float))
        if np.any(th == 0):
            raise ValueError("beta has a pole at theta = 0")
        return 2.0 * np.pi * np.sin(th) * k.eval_theta(th)
    return beta3


class LiftedSpectrum:
    """``xi in R^3 -> F_hat(|xi|)`` from a 1D spectral state."""

    def __init__(self, F_hat: SpectralState, scheme: str = "cubic"):
        self.state = F_hat
        self._interp = FourierInterpolant(F_hat.grid, F_hat.values, scheme)

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        r = np.linalg.norm(xi, axis=-1) if xi.ndim >= 1 and xi.shape[-1] == 3 else np.abs(xi)
        if np.any(r > self.state.grid.xi_max * (1 + 1e-12)):
            raise ValueError(f"|xi| exceeds the grid limit {self.state.grid.xi_max}")
        return self._interp(r)

    def gevrey_norm_sq(self, c0: float) -> float:
        """``||e^{(c0/2) <xi>} f_hat||^2_{L^2(R^3)} = 4 pi int e^{c0 <r>} F_hat(r)^2 r^2 dr``
        over ``[0, Xi]`` (composite Simpson in shells on the grid)."""
        from scipy.integrate import simpson
        r = self.state.grid.nodes
        integrand = np.exp(c0 * japanese(r)) * self.state.values ** 2 * r ** 2
        return float(4.0 * np.pi * simpson(integrand, x=r))


def lift_spectrum(F_hat: SpectralState, scheme: str = "cubic") -> LiftedSpectrum:
    return LiftedSpectrum(F_hat, scheme)

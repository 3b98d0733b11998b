"""Initial data on the frequency grid, plus CSV input for tabulated data."""
from __future__ import annotations

import csv
from typing import Tuple

import numpy as np
from scipy.interpolate import CubicSpline

from .spectral import FourierGrid, SpectralState

DATUMS = ("gaussian", "laplace", "uniform_ball_3d", "tabulated")


def gaussian_hat(xi, mass: float = 1.0, temperature: float = 1.0):
    return mass * np.exp(-0.5 * temperature * np.square(xi))


def laplace_hat(xi):
    """Transform of ``exp(-|v|) / 2``."""
    return 1.0 / (1.0 + np.square(xi))


def uniform_ball_hat(xi, radius: float = 1.0):
    """Transform of the normalized uniform ball in 3D, radial in ``|xi|``.

    ``3 (sin x - x cos x) / x^3`` with ``x = |xi| R``; a series is used for
    small ``x`` where the closed form cancels.
    """
    x = np.abs(np.asarray(xi, dtype=float)) * radius
    out = np.empty_like(x)
    small = x < 1e-2
    xs = x[small] ** 2
    out[small] = 1.0 - xs / 10.0 + xs ** 2 / 280.0 - xs ** 3 / 15120.0
    xl = x[~small]
    out[~small] = 3.0 * (np.sin(xl) - xl * np.cos(xl)) / xl ** 3
    return out


def read_two_columns(path) -> Tuple[np.ndarray, np.ndarray]:
    """Two numeric columns from a CSV file; a non-numeric first row is a header."""
    rows = []
    with open(path, newline="") as fh:
        for k, row in enumerate(csv.reader(fh)):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                rows.append((float(row[0]), float(row[1])))
            except (ValueError, IndexError):
                if rows:
                    raise ValueError(f"{path}:{k + 1}: expected two numeric columns, got {row!r}")
    if len(rows) < 4:
        raise ValueError(f"{path}: need at least four data rows")
    a = np.array(rows)
    if np.any(np.diff(a[:, 0]) <= 0):
        raise ValueError(f"{path}: first column must be strictly increasing")
    return a[:, 0], a[:, 1]


def tabulated_hat(path, grid: FourierGrid, column_kind: str = "fourier") -> np.ndarray:
    """Transform on the grid from a table of ``(xi, f_hat)`` or ``(v, f)``.

    Fourier tables are spline-interpolated onto the grid (and must cover it).
    Velocity tables hold an even density sampled on ``v >= 0``; its cosine
    transform is computed with Gauss-Legendre points on every table interval.
    """
    x, y = read_two_columns(path)
    xi = grid.nodes
    if column_kind == "fourier":
        if x[0] > 0 or x[-1] < grid.xi_max * (1 - 1e-12):
            raise ValueError(f"{path}: table covers [{x[0]}, {x[-1]}], grid needs [0, {grid.xi_max}]")
        return CubicSpline(x, y, bc_type=((1, 0.0), "not-a-knot"))(xi)
    if column_kind == "velocity":
        if x[0] != 0.0 or np.any(y < 0):
            raise ValueError(f"{path}: velocity table must start at v = 0 with f >= 0")
        spl = CubicSpline(x, y, bc_type="not-a-knot")
        gx, gw = np.polynomial.legendre.leggauss(8)
        left, width = x[:-1, None], np.diff(x)[:, None]
        pts = (left + 0.5 * width * (gx[None, :] + 1.0)).ravel()
        wts = (0.5 * width * gw[None, :]).ravel() * spl(pts)
        return 2.0 * np.cos(np.outer(xi, pts)) @ wts
    raise ValueError(f"column kind must be 'fourier' or 'velocity', got {column_kind!r}")


def initial_state(kind: str, grid: FourierGrid, path=None, column_kind: str = "fourier",
                  ball_radius: float = 1.0) -> SpectralState:
    if kind == "gaussian":
        vals = gaussian_hat(grid.nodes)
    elif kind == "laplace":
        vals = laplace_hat(grid.nodes)
    elif kind == "uniform_ball_3d":
        vals = uniform_ball_hat(grid.nodes, ball_radius)
    elif kind == "tabulated":
        if path is None:
            raise ValueError("tabulated initial datum needs a file path")
        vals = tabulated_hat(path, grid, column_kind)
    else:
        raise ValueError(f"unknown initial datum {kind!r}; expected one of {DATUMS}")
    return SpectralState(grid, vals, 0.0)

"""Kac collision operator in Fourier form, its angular quadrature, and a
velocity-space oracle used for cross-validation."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.interpolate import CubicSpline

from .kernels import bobylev_sum, velocity_collision_sum
from .spectral import CrossSectionParams, FourierGrid, SpectralState

QUADRATURE_SCHEMES = ("graded_trapezoid", "gauss_panels")
INTERP_SCHEMES = ("auto", "cubic", "log_cubic")


def beta(theta, p: CrossSectionParams):
    """Cross-section ``b0 |cos| / |sin|^(1+2s)``, used on all of [-pi/2, pi/2]."""
    theta = np.asarray(theta, dtype=float)
    if np.any(theta == 0.0):
        raise ValueError("beta has a pole at theta = 0")
    return p.b0 * np.abs(np.cos(theta)) / np.abs(np.sin(theta)) ** (1.0 + 2.0 * p.s)


# --- angular quadrature -------------------------------------------------------

@dataclass(frozen=True)
class AngularQuadrature:
    """Folded quadrature on ``[theta_cut, pi/2]``; weights include the factor 2
    from ``theta -> -theta``."""

    nodes: np.ndarray
    weights: np.ndarray
    scheme: str
    theta_cut: float

    def __post_init__(self):
        if np.any(np.diff(self.nodes) <= 0):
            raise ValueError("quadrature nodes must be strictly increasing")
        if self.nodes[0] < self.theta_cut * (1 - 1e-12):
            raise ValueError("quadrature nodes must lie above theta_cut")

    def moment(self, p: CrossSectionParams, power: float = 2.0) -> float:
        """Discrete ``int beta(theta) |theta|^power`` over both signs of theta."""
        return float(np.sum(self.weights * beta(self.nodes, p) * self.nodes ** power))

    def loss_mass(self, p: CrossSectionParams) -> float:
        return float(np.sum(self.weights * beta(self.nodes, p)))


def _graded_rule(eps: float, n: int, scheme: str) -> Tuple[np.ndarray, np.ndarray]:
    # theta = eps * (pi / 2 eps)^u, u in [0, 1]; geometric clustering at eps
    span = np.log(0.5 * np.pi / eps)
    if scheme == "graded_trapezoid":
        u = np.linspace(0.0, 1.0, n)
        wu = np.full(n, 1.0 / (n - 1))
        wu[0] *= 0.5
        wu[-1] *= 0.5
    else:
        per = 8 if n % 8 == 0 else (4 if n % 4 == 0 else n)
        panels = n // per
        x, w = np.polynomial.legendre.leggauss(per)
        edges = np.linspace(0.0, 1.0, panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        u = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        wu = (half[:, None] * w[None, :]).ravel()
    theta = eps * np.exp(span * u)
    return theta, 2.0 * wu * span * theta


def build_quadrature(p: CrossSectionParams, n_nodes: int = 128,
                     scheme: str = "gauss_panels", check: bool = True,
                     rtol: float = 1e-4) -> AngularQuadrature:
    """Graded angular rule, reusable across all frequencies and time steps.

    With ``check`` the discrete ``beta * theta^2`` moment is compared against a
    rule with twice the nodes; disagreement beyond ``rtol`` is an error.
    """
    if n_nodes < 16:
        raise ValueError(f"need at least 16 angular nodes, got {n_nodes}")
    if scheme not in QUADRATURE_SCHEMES:
        raise ValueError(f"scheme must be one of {QUADRATURE_SCHEMES}")
    nodes, weights = _graded_rule(p.theta_cut, n_nodes, scheme)
    q = AngularQuadrature(nodes, weights, scheme, p.theta_cut)
    if check:
        fine = AngularQuadrature(*_graded_rule(p.theta_cut, 2 * n_nodes, scheme), scheme, p.theta_cut)
        m, mf = q.moment(p), fine.moment(p)
        if abs(m - mf) > rtol * abs(mf):
            raise ValueError(f"angular moment not converged at n={n_nodes}: {m:.8g} vs {mf:.8g} "
                             f"at n={2 * n_nodes}; increase n_nodes")
    return q


def angle_factors(q: AngularQuadrature, p: CrossSectionParams):
    """``(a_minus, 1 - a_plus)`` for the configured angle map, computed without
    cancellation."""
    th = q.nodes if p.angle_map == "full_angle" else 0.5 * q.nodes
    return np.abs(np.sin(th)), 2.0 * np.sin(0.5 * th) ** 2


# --- Fourier-side interpolation ----------------------------------------------

class FourierInterpolant:
    """Cubic spline of a half-grid transform, reflected to ``[-Xi, Xi]``.

    Even data (``parity=1``) gives zero slope at 0; ``'log_cubic'`` splines
    ``log f_hat`` instead and so reproduces Gaussians to round-off away from
    the right end, which uses the natural condition.

    For even data the first interval ``[0, h)`` uses the even degree-6
    interpolant through the first four nodes instead of the spline: the
    curvature at 0 (the energy) then converges at O(h^6) rather than O(h^2),
    which matters because the angular kernel weights it by ``theta^2``.
    """

    def __init__(self, grid: FourierGrid, values, scheme: str = "auto", parity: int = 1):
        vals = np.asarray(values, dtype=float)
        if scheme not in INTERP_SCHEMES:
            raise ValueError(f"scheme must be one of {INTERP_SCHEMES}")
        if scheme == "auto":
            scheme = "log_cubic" if parity == 1 and np.all(vals > 1e-300) else "cubic"
        if scheme == "log_cubic":
            if parity != 1 or np.any(vals <= 0):
                raise ValueError("log_cubic needs strictly positive even data")
            data = np.log(vals)
        else:
            data = vals
        self.grid = grid
        self.scheme = scheme
        self.parity = parity
        self.node_data = data
        x = grid.nodes
        xm = np.concatenate([-x[:0:-1], x])
        ym = np.concatenate([parity * data[:0:-1], data])
        c = CubicSpline(xm, ym, bc_type="natural").c[:, grid.n_points - 1:].copy()
        if parity == 1:
            c[2, 0] = 0.0
            y = (grid.spacing * np.arange(1, 4)) ** 2
            vander = y[:, None] ** np.arange(1, 4)[None, :]
            self.near0 = np.linalg.solve(vander, data[1:4] - data[0])
        else:
            c[3, 0] = 0.0
            self.near0 = np.zeros(3)
        self.coef = c

    @property
    def log_mode(self) -> bool:
        return self.scheme == "log_cubic"

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        if np.any(xi < 0) or np.any(xi > self.grid.xi_max * (1 + 1e-12)):
            raise ValueError(f"interpolation argument outside [0, {self.grid.xi_max}]")
        c = self.coef
        h = self.grid.spacing
        i = np.minimum((xi / h).astype(np.int64), c.shape[1] - 1)
        dx = xi - i * h
        val = ((c[0, i] * dx + c[1, i]) * dx + c[2, i]) * dx + c[3, i]
        if self.parity == 1:
            y = xi * xi
            e = self.near0
            val = np.where(i == 0, c[3, 0] + y * (e[0] + y * (e[1] + y * e[2])), val)
        return np.exp(val) if self.log_mode else val


def interp_fourier(state: SpectralState, xi, scheme: str = "auto"):
    return FourierInterpolant(state.grid, state.values, scheme)(xi)


# --- collision operator ------------------------------------------------------

def _weighted_beta(q: AngularQuadrature, p: CrossSectionParams, beta_fn=None):
    b = beta(q.nodes, p) if beta_fn is None else np.asarray(beta_fn(q.nodes), dtype=float)
    return q.weights * b


def collision_rhs(state: SpectralState, q: AngularQuadrature, p: CrossSectionParams,
                  interp: str = "auto", backend: Optional[str] = None,
                  beta_fn=None) -> np.ndarray:
    """Bobylev form of ``K(f, f)`` at every grid node.

    Gain and loss are never formed separately: each diverges as the angular
    cutoff shrinks, only their bracket is integrable. ``beta_fn`` replaces the
    cross-section of ``p`` (e.g. one reduced from a 3D kernel).
    """
    spl = FourierInterpolant(state.grid, state.values, interp)
    a_minus, omap = angle_factors(q, p)
    wb = _weighted_beta(q, p, beta_fn)
    return bobylev_sum(spl.coef, spl.near0, spl.coef, spl.node_data, state.grid.spacing,
                       a_minus, omap, wb, spl.log_mode, backend)


def collision_bilinear(f_values, u_values, grid: FourierGrid, q: AngularQuadrature,
                       p: CrossSectionParams, u_parity: int = 1,
                       backend: Optional[str] = None, beta_fn=None) -> np.ndarray:
    """Transform of ``K(f, u)`` for even ``f`` and ``u`` of either parity."""
    fs = FourierInterpolant(grid, f_values, "cubic", 1)
    us = FourierInterpolant(grid, u_values, "cubic", u_parity)
    a_minus, omap = angle_factors(q, p)
    wb = _weighted_beta(q, p, beta_fn)
    return bobylev_sum(fs.coef, fs.near0, us.coef, us.node_data, grid.spacing,
                       a_minus, omap, wb, False, backend)


# --- velocity space ----------------------------------------------------------

@dataclass(frozen=True)
class VelocityGrid:
    """Uniform symmetric grid on ``[-v_max, v_max]`` with ``n_points`` nodes."""

    v_max: float
    n_points: int

    def __post_init__(self):
        if not self.v_max > 0:
            raise ValueError("v_max must be positive")
        if self.n_points < 5 or self.n_points % 2 == 0:
            raise ValueError("n_points must be odd (v = 0 is a node) and >= 5")

    @property
    def nodes(self):
        return np.linspace(-self.v_max, self.v_max, self.n_points)

    @property
    def spacing(self):
        return 2.0 * self.v_max / (self.n_points - 1)

    def trapezoid_weights(self):
        w = np.full(self.n_points, self.spacing)
        w[0] = w[-1] = 0.5 * self.spacing
        return w

    def simpson_weights(self):
        """Composite Simpson weights; when ``(n-1) % 4 == 0`` the node ``v = 0``
        is a panel boundary, so a kink there costs no accuracy."""
        w = np.ones(self.n_points)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        return w * self.spacing / 3.0


def _check_decay(f, tol=1e-12):
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise ValueError("velocity density must be nonnegative")
    scale = max(float(np.max(np.abs(f))), 1e-300)
    if max(abs(f[0]), abs(f[-1])) > tol * max(scale, 1.0):
        raise ValueError("density has significant mass at the velocity boundary; enlarge v_max")
    return f


def velocity_space_collision(f, vgrid: VelocityGrid, q: AngularQuadrature,
                             p: CrossSectionParams, backend: Optional[str] = None) -> np.ndarray:
    """Brute-force ``K(f, f)(v)`` on the velocity grid, O(N^2 n_theta).

    Post-collision values come from a natural cubic spline of ``f`` (zero
    outside the grid); the ``v_*`` integral is a trapezoid sum. Coarse grids
    only. Needs smooth ``f``: a kink makes the pointwise operator singular.
    """
    if p.angle_map != "full_angle":
        raise ValueError("the velocity-space oracle implements the Kac rotation only")
    f = _check_decay(f)
    v = vgrid.nodes
    c = CubicSpline(v, f, bc_type="natural").c
    wb = q.weights * beta(q.nodes, p)
    return velocity_collision_sum(c, f, v, vgrid.trapezoid_weights(),
                                  np.cos(q.nodes), np.sin(q.nodes), wb, backend)


def velocity_to_fourier(values, vgrid: VelocityGrid, xi) -> np.ndarray:
    """Simpson-rule cosine transform of an even velocity-space array."""
    v = vgrid.nodes
    w = vgrid.simpson_weights() * np.asarray(values, dtype=float)
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    return np.cos(np.outer(xi, v)) @ w


def _half_line_rule(f, vgrid: VelocityGrid, per_interval: int = 8):
    # even f -> points and weights on [0, v_max] (weights doubled for v < 0),
    # with f replaced by its not-a-knot spline through the v >= 0 nodes
    n = vgrid.n_points
    half = np.asarray(f, dtype=float)[n // 2:]
    if not np.allclose(half, np.asarray(f, dtype=float)[n // 2::-1], rtol=1e-12, atol=1e-300):
        raise ValueError("the transform oracle needs an even density")
    v = vgrid.nodes[n // 2:]
    spl = CubicSpline(v, half, bc_type="not-a-knot")
    x, w = np.polynomial.legendre.leggauss(per_interval)
    h = vgrid.spacing
    pts = (v[:-1, None] + 0.5 * h * (x[None, :] + 1.0)).ravel()
    wts = np.tile(0.5 * h * w, v.size - 1)
    return pts, wts * spl(pts)


def velocity_space_transform(f, vgrid: VelocityGrid, xi, q: AngularQuadrature,
                             p: CrossSectionParams) -> np.ndarray:
    """Transform of ``K(f, f)`` at ``xi`` computed entirely in velocity space.

    Uses the weak form: ``K(f,f)`` tested against ``cos(xi v)``, i.e. the
    double integral of ``f(v) f(v_*) [phi(v') - phi(v)]`` with the rotated test
    function folded over +/- theta. For even ``f`` the double sum separates into
    products of one-dimensional moments; those are integrated exactly against
    a spline of ``f`` on the half line, so a kink at ``v = 0`` (e.g. the
    Laplace density) costs no accuracy.
    """
    f = _check_decay(f)
    v, wf = _half_line_rule(f, vgrid)
    wf = 2.0 * wf
    a_minus, omap = angle_factors(q, p)
    wb = q.weights * beta(q.nodes, p)
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    m0 = wf.sum()
    out = np.empty(xi.size)
    for n, x in enumerate(xi):
        m_xi = np.cos(x * v) @ wf
        # cos(a) - 1 and cos(a) - cos(b) in sine form: no cancellation at small theta
        dm_minus = -2.0 * (np.sin(0.5 * x * np.outer(a_minus, v)) ** 2) @ wf
        arg = 0.5 * x * v[None, :]
        dm_plus = -2.0 * (np.sin(arg * (2.0 - omap)[:, None]) * np.sin(-arg * omap[:, None])) @ wf
        out[n] = wb @ (dm_minus * (m_xi + dm_plus) + m0 * dm_plus)
    return out


def entropy(f, vgrid: VelocityGrid, floor: float = 1e-300) -> Tuple[float, float]:
    """``(int f log f, int f log(1 + f))`` by the trapezoid rule."""
    f = np.asarray(f, dtype=float)
    if np.any(f < 0):
        raise ValueError("entropy needs a nonnegative density")
    w = vgrid.trapezoid_weights()
    pos = f > floor
    flogf = np.zeros_like(f)
    flogf[pos] = f[pos] * np.log(f[pos])
    return float(w @ flogf), float(w @ (f * np.log1p(f)))

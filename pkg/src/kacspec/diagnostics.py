"""Turning trajectories into numbers: smoothing rates, commutator ratios,
coercivity and the psi comparison bound."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import nnls

from .collision import AngularQuadrature, collision_bilinear
from .spectral import (CrossSectionParams, ExpMollifierParams, PolyMollifierParams,
                       SpectralState, WeightedNormSpec, conserved_quantities, japanese,
                       mollifier_symbol, sobolev_sq, weighted_norm, weighted_sobolev_sq,
                       xi_derivative)

FIT_FLOOR = 1e-14
EVOLVED_FLOOR = 1e-290
DELTA_SCHEDULE = (0.5, 0.25, 0.125, 0.0625)


# --- per-snapshot records ---------------------------------------------------

@dataclass(frozen=True)
class ProbeSpec:
    """What :func:`make_record` measures at each output time."""

    norms: Tuple[WeightedNormSpec, ...] = (WeightedNormSpec(0.0, 0),)
    fit_alpha: Optional[float] = None
    fit_window: Optional[Tuple[float, float]] = None


@dataclass(frozen=True)
class DiagnosticsRecord:
    time: float
    mass_drift: float
    energy_drift: float
    sobolev_norms: Dict[WeightedNormSpec, float] = field(default_factory=dict)
    fitted_c: Optional[float] = None
    fit_residual: Optional[float] = None

    def __post_init__(self):
        if not (np.isfinite(self.mass_drift) and np.isfinite(self.energy_drift)):
            raise ValueError("drifts must be finite")


def make_record(state: SpectralState, initial: SpectralState, probes: ProbeSpec) -> DiagnosticsRecord:
    m0, e0 = conserved_quantities(initial)
    m, e = conserved_quantities(state)
    norms = {spec: weighted_norm(state, spec) for spec in probes.norms}
    c = res = None
    if probes.fit_alpha is not None and probes.fit_window is not None:
        try:
            fit = _fit_gained_decay(state.grid.nodes, initial.values, state.values,
                                    probes.fit_alpha, probes.fit_window)
            c, res = fit.c, fit.residual
        except ValueError:
            pass
    return DiagnosticsRecord(state.time, (m - m0) / abs(m0), (e - e0) / abs(e0) if e0 else e - e0,
                             norms, c, res)


# --- smoothing rate ---------------------------------------------------------

class SmoothingFit(NamedTuple):
    t: float
    c: float
    residual: float
    xi_hi: float


def _fit_gained_decay(xi, v0, vt, alpha, window, floor=FIT_FLOOR, t=0.0,
                      evolved_floor=EVOLVED_FLOOR) -> SmoothingFit:
    lo, hi = window
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    if not (0 <= lo < hi <= xi[-1] * (1 + 1e-12)):
        raise ValueError(f"fit window {window} is not inside the grid [0, {xi[-1]}]")
    sel = (xi >= lo) & (xi <= hi)
    if np.any(np.abs(v0[sel]) <= floor):
        raise ValueError("initial transform falls below the floor inside the fit window; "
                         "shrink the window")
    ok = np.abs(vt[sel]) > evolved_floor
    # shrink the window to the prefix where the evolved transform is resolved
    if not np.all(ok):
        first_bad = int(np.argmin(ok))
        idx = np.flatnonzero(sel)[:first_bad]
    else:
        idx = np.flatnonzero(sel)
    if idx.size < 3:
        raise ValueError(f"transform underflows across the fit window at t={t:g}; "
                         "shrink the window")
    x = japanese(xi[idx]) ** alpha
    y = np.log(np.abs(v0[idx])) - np.log(np.abs(vt[idx]))
    A = np.column_stack([np.ones_like(x), x])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    return SmoothingFit(float(t), float(coef[1]), float(np.sqrt(np.mean(resid ** 2))), float(xi[idx[-1]]))


def smoothing_exponent_fit(traj, alpha: float, fit_window: Tuple[float, float],
                           floor: float = FIT_FLOOR,
                           evolved_floor: float = EVOLVED_FLOOR) -> List[SmoothingFit]:
    """Rate ``c(t)`` of decay gained since ``t = 0``, per snapshot.

    Least-squares fit of ``log|f_hat(0, xi)| - log|f_hat(t, xi)| = a + c <xi>^alpha``
    over the window; ``residual`` is the RMS misfit. The initial transform must
    exceed ``floor`` on the window. Evolved snapshots are only limited by
    ``evolved_floor`` (the log-mode right-hand side is accurate relative to the
    local value, so tiny magnitudes still carry information); where one drops
    below it the window is cut back at that point.
    """
    xi = traj.grid.nodes
    v0 = traj.snapshots[0].values
    return [_fit_gained_decay(xi, v0, s.values, alpha, fit_window, floor, s.time, evolved_floor)
            for s in traj.snapshots]


# --- commutators --------------------------------------------------------------

PAIRINGS = {
    ("exp", 0): "exp_l0",
    ("exp", 1): "exp_l1",
    ("poly", 0): "poly_l0",
    ("poly", 2): "poly_l2",
}


@dataclass(frozen=True)
class CommutatorFactors:
    pairing: str
    factors: Dict[str, float]
    bound: float


def _pairing_id(kind: str, ell: int, s: float) -> str:
    key = (kind, ell)
    if key not in PAIRINGS:
        raise ValueError(f"weight power {ell} is not paired with the {kind} mollifier "
                         "(exp uses 0 or 1, poly uses 0 or 2)")
    name = PAIRINGS[key]
    if ell > 0:
        if s < 0.5:
            raise ValueError("weighted commutator bounds need s >= 1/2")
        if s == 0.5:
            name += "_half"
    return name


def _l1_norms(f: SpectralState) -> Tuple[float, float]:
    # ||f||_{L^1} and ||f||_{L^1_2} for a nonnegative density
    m, e = conserved_quantities(f)
    return abs(m), abs(m) + abs(e)


def commutator_residual(mollifier, weight_power: int, f: SpectralState, g: SpectralState,
                        h: SpectralState, p: CrossSectionParams, q: AngularQuadrature,
                        alpha_prime: float = 0.5, backend=None) -> Tuple[float, CommutatorFactors]:
    """``|(W K(f,g), h) - (K(f, W g), h)|`` with ``W = v^l`` times a mollifier.

    For ``l = 1`` the pairing against even ``h`` vanishes by parity, so the
    test function is ``v h`` instead. Returns the left side and the norms of
    the matching upper bound.
    """
    kind, params, t = mollifier
    if kind not in ("exp", "poly"):
        raise ValueError(f"mollifier kind must be 'exp' or 'poly', got {kind!r}")
    ell = int(weight_power)
    pairing = _pairing_id(kind, ell, p.s)
    grid = f.grid
    if g.grid != grid or h.grid != grid:
        raise ValueError("f, g and h must share a grid")
    xi, dx = grid.nodes, grid.spacing
    W = mollifier_symbol(mollifier, xi)

    wk = W * collision_bilinear(f.values, g.values, grid, q, p, 1, backend)
    wg = W * g.values
    if ell:
        wk = xi_derivative(wk, dx, 1, ell)
        wg = xi_derivative(wg, dx, 1, ell)
    k_wg = collision_bilinear(f.values, wg, grid, q, p, (-1) ** ell, backend)
    test = xi_derivative(h.values, dx, 1, 1) if ell == 1 else h.values
    lhs = abs(float(np.trapezoid((wk - k_wg) * test, xi)) / np.pi)

    l1, l1_2 = _l1_norms(f)
    wf = W * f.values
    wg0 = W * g.values
    fac: Dict[str, float] = {}
    if pairing == "exp_l0":
        a = params.alpha / 2
        fac = {"Wf_L2_1": weighted_sobolev_sq(wf, grid, 0, 1) ** 0.5,
               "Wg_H_a": sobolev_sq(wg0, grid, a) ** 0.5,
               "h_H_a": sobolev_sq(test, grid, a) ** 0.5}
        bound = float(np.prod(list(fac.values())))
    elif pairing == "exp_l1":
        fac = {"f_L1_2+Wf_L2_1": l1_2 + weighted_sobolev_sq(wf, grid, 0, 1) ** 0.5,
               "Wg_H_half_1": weighted_sobolev_sq(wg0, grid, 0.5, 1) ** 0.5,
               "h_H_half": sobolev_sq(test, grid, 0.5) ** 0.5}
        bound = float(np.prod(list(fac.values())))
    elif pairing == "exp_l1_half":
        a, ap = params.alpha / 2, alpha_prime / 2
        fac = {"f_L1_2": l1_2,
               "Wg_H_ap": sobolev_sq(wg0, grid, ap) ** 0.5,
               "h_H_ap": sobolev_sq(test, grid, ap) ** 0.5,
               "Wf_L2_1": weighted_sobolev_sq(wf, grid, 0, 1) ** 0.5,
               "Wg_H_a": sobolev_sq(wg0, grid, a) ** 0.5,
               "h_H_a": sobolev_sq(test, grid, a) ** 0.5}
        bound = (fac["f_L1_2"] * fac["Wg_H_ap"] * fac["h_H_ap"]
                 + fac["Wf_L2_1"] * fac["Wg_H_a"] * fac["h_H_a"])
    elif pairing == "poly_l0":
        fac = {"f_L1": l1,
               "Wg_L2": sobolev_sq(wg0, grid, 0) ** 0.5,
               "h_L2": sobolev_sq(test, grid, 0) ** 0.5}
        bound = float(np.prod(list(fac.values())))
    else:
        k = 0.5 if pairing == "poly_l2" else alpha_prime / 2
        fac = {"f_L1_2": l1_2,
               "Wg_H_k_2": weighted_sobolev_sq(wg0, grid, k, 2) ** 0.5,
               "h_H_k": sobolev_sq(test, grid, k) ** 0.5}
        bound = float(np.prod(list(fac.values())))
    return lhs, CommutatorFactors(pairing, fac, float(bound))


def commutator_ratio(mollifier, weight_power, f, g, h, p, q, **kw) -> float:
    lhs, fac = commutator_residual(mollifier, weight_power, f, g, h, p, q, **kw)
    return lhs / fac.bound if fac.bound > 0 else 0.0


def delta_sweep(kind: str, params, t: float, weight_power: int, f, g, h, p, q,
                deltas: Sequence[float] = DELTA_SCHEDULE, **kw) -> List[Tuple[float, float]]:
    """``(delta, ratio)`` across the refinement schedule."""
    from dataclasses import replace
    return [(d, commutator_ratio((kind, replace(params, delta=d), t), weight_power, f, g, h, p, q, **kw))
            for d in deltas]


def delta_uniformity(ratios: Sequence[float]) -> Tuple[float, bool]:
    """Spread ``max/min - 1`` of a ratio series and whether it runs away
    monotonically (strictly monotone with growing increments)."""
    r = np.asarray(ratios, dtype=float)
    spread = float(r.max() / r.min() - 1.0) if r.min() > 0 else np.inf
    d = np.diff(r)
    runaway = bool(d.size >= 2 and (np.all(d > 0) or np.all(d < 0))
                   and np.all(np.abs(d[1:]) > np.abs(d[:-1])))
    return spread, runaway


# --- coercivity -----------------------------------------------------------------

class CoercivityResult(NamedTuple):
    c_f_estimate: float
    correction: float


def _dissipation_terms(f: SpectralState, g: SpectralState, p, q, backend=None):
    if f.grid != g.grid:
        raise ValueError("f and g must share a grid")
    grid = f.grid
    gn2 = sobolev_sq(g.values, grid, 0)
    if gn2 == 0:
        raise ValueError("g must be nonzero")
    if not f.values[0] > 0:
        raise ValueError("f must have positive mass")
    kfg = collision_bilinear(f.values, g.values, grid, q, p, 1, backend)
    pairing = float(np.trapezoid(kfg * g.values, grid.nodes)) / np.pi
    hs2 = sobolev_sq(g.values, grid, p.s)
    return pairing, gn2, hs2


def coercivity_ratio(f: SpectralState, g: SpectralState, p: CrossSectionParams,
                     q: AngularQuadrature, backend=None) -> CoercivityResult:
    """``(-(K(f,g), g) + C ||f||_1 ||g||^2) / ||g||_{H^s}^2`` and the correction term.

    ``C`` is the discrete loss mass ``sum w beta`` of the quadrature.
    """
    pairing, gn2, hs2 = _dissipation_terms(f, g, p, q, backend)
    correction = q.loss_mass(p) * abs(f.values[0]) * gn2
    return CoercivityResult((-pairing + correction) / hs2, correction)


def dissipation_ratio(f: SpectralState, g: SpectralState, p: CrossSectionParams,
                      q: AngularQuadrature, backend=None) -> float:
    """``-(K(f,g), g) / ||g||_{H^s}^2``: the collision part of the estimate alone."""
    pairing, _, hs2 = _dissipation_terms(f, g, p, q, backend)
    return -pairing / hs2


# --- psi comparison bound --------------------------------------------------------

@dataclass(frozen=True)
class PsiBoundParams:
    C1: float
    C2: float
    gamma: float
    psi0: float

    def __post_init__(self):
        if not self.C1 > 0:
            raise ValueError("C1 must be positive")
        if self.C2 < 0:
            raise ValueError("C2 must be nonnegative")
        if not self.gamma > 1:
            raise ValueError("gamma must exceed 1")
        if not self.psi0 > 0:
            raise ValueError("psi0 must be positive")


def gamma_for(s: float, alpha: float = 0.5) -> float:
    """Growth exponent of the psi inequality: ``1/(2s-1) + 2`` for ``s > 1/2``,
    ``alpha/(1-alpha) + 3`` for ``s = 1/2``."""
    if s > 0.5:
        return 1.0 / (2.0 * s - 1.0) + 2.0
    if s == 0.5:
        return alpha / (1.0 - alpha) + 3.0
    raise ValueError("the psi inequality needs s >= 1/2")


def blowup_time(pb: PsiBoundParams) -> float:
    """First zero of the bound's denominator (``inf`` when ``C2 = 0``)."""
    if pb.C2 == 0:
        return np.inf
    g1 = pb.gamma - 1.0
    return float(np.log1p(pb.C1 / (pb.C2 * pb.psi0 ** g1)) / (g1 * pb.C1))


def half_condition_time(pb: PsiBoundParams) -> float:
    """Largest ``T`` with denominator ``>= (1/2)^(gamma-1)``; on ``[0, T]`` the
    bound is at most ``2 e^{C1 t} psi0``."""
    if pb.C2 == 0:
        return np.inf
    g1 = pb.gamma - 1.0
    room = 1.0 - 0.5 ** g1
    return float(np.log1p(room * pb.C1 / (pb.C2 * pb.psi0 ** g1)) / (g1 * pb.C1))


def psi_bound(t, pb: PsiBoundParams):
    """Closed-form solution of ``psi' = C1 psi + C2 psi^gamma`` (``inf`` past blow-up)."""
    t = np.asarray(t, dtype=float)
    g1 = pb.gamma - 1.0
    growth = np.exp(pb.C1 * t) * pb.psi0
    if pb.C2 == 0:
        return growth
    den = 1.0 - (pb.C2 / pb.C1) * np.expm1(g1 * pb.C1 * t) * pb.psi0 ** g1
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(den > 0, growth / np.abs(den) ** (1.0 / g1), np.inf)
    return out


def psi_series(traj, mp: ExpMollifierParams) -> np.ndarray:
    """``psi(t) = ||G_delta f(t)||_{L^2_1}`` at each snapshot."""
    spec = WeightedNormSpec(0.0, 1)
    return np.array([weighted_norm(s, spec, ("exp", mp, s.time)) for s in traj.snapshots])


def fit_psi_constants(times, psi, gamma: float) -> Tuple[float, float]:
    """Envelope constants ``(C1, C2)`` with ``psi' <= C1 psi + C2 psi^gamma``.

    Secant slopes of ``psi`` are regressed on the secant midpoints by
    nonnegative least squares. ``C2`` is then raised until every secant slope
    is at most the right-hand side at the secant's left end. Because that
    right-hand side increases along the closed-form solution, the bound then
    dominates ``psi`` at every sample.
    """
    t = np.asarray(times, dtype=float)
    y = np.asarray(psi, dtype=float)
    if t.size < 2:
        raise ValueError("need at least two samples")
    mid = 0.5 * (y[1:] + y[:-1])
    left = y[:-1]
    dpsi = np.diff(y) / np.diff(t)
    coef = nnls(np.column_stack([mid, mid ** gamma]), dpsi)[0]
    c1 = max(float(coef[0]), 1e-12)
    c2 = max(float(coef[1]), float(np.max((dpsi - c1 * left) / left ** gamma)), 0.0)
    return c1, c2


@dataclass(frozen=True)
class PsiBoundReport:
    times: np.ndarray
    psi: np.ndarray
    bound: np.ndarray
    t_star: float
    t_half: float
    holds: bool
    exceeded_t_star: bool
    final_lhs: np.ndarray
    final_rhs: np.ndarray
    final_holds: bool
    delta_refinement: Dict[float, np.ndarray]


def psi_bound_check(traj, mollifier_params: ExpMollifierParams, pb: PsiBoundParams,
                    rtol: float = 1e-9) -> PsiBoundReport:
    """Compare ``psi(t)`` with the closed-form bound on ``t <= T*``.

    Also evaluates ``||e^{c0 t <D>^alpha} f(t)||_{L^2_1} <= 2 e^{C1 t} ||f_0||_{L^2_1}``
    on ``t <= T_half`` (the ``delta -> 0`` limit of the mollified norm).
    Running past ``T*`` is reported, not raised.
    """
    t = traj.times
    psi = psi_series(traj, mollifier_params)
    bound = psi_bound(t, pb)
    t_star = blowup_time(pb)
    t_half = half_condition_time(pb)
    inside = t < t_star
    holds = bool(np.all(psi[inside] <= bound[inside] * (1 + rtol)))

    spec = WeightedNormSpec(0.0, 1)
    f0 = weighted_norm(traj.snapshots[0], spec)
    xi = traj.grid.nodes
    final_lhs = np.array([
        np.sqrt(weighted_sobolev_sq(np.exp(mollifier_params.c0 * s.time * japanese(xi) ** mollifier_params.alpha)
                                    * s.values, s.grid, 0.0, 1))
        for s in traj.snapshots])
    final_rhs = 2.0 * np.exp(pb.C1 * t) * f0
    in_half = t <= t_half
    final_holds = bool(np.all(final_lhs[in_half] <= final_rhs[in_half] * (1 + rtol)))

    from dataclasses import replace
    refine = {}
    for k in (2, 4):
        d = mollifier_params.delta / k
        refine[d] = psi_series(traj, replace(mollifier_params, delta=d))
    return PsiBoundReport(t, psi, bound, t_star, t_half, holds, bool(t[-1] > t_star),
                          final_lhs, final_rhs, final_holds, refine)


# --- Sobolev growth -----------------------------------------------------------------

@dataclass(frozen=True)
class GrowthFit:
    slope_fit: float
    slope: float
    intercept: float
    linear_coef: float
    quadratic_coef: float
    bounded: bool
    super_exponential: bool


def sobolev_growth_fit(traj, window: Tuple[float, float] = (0.1, 0.5),
                       spec: WeightedNormSpec = WeightedNormSpec(2.0, 2),
                       quad_ratio: float = 1e-2) -> GrowthFit:
    """Exponential-growth envelope of ``log ||f(t)||`` on a time window.

    ``slope_fit`` is the least-squares slope; the reported envelope slope is
    ``max(slope_fit, 0)`` with the intercept raised until the line bounds every
    sample. A degree-2 fit flags super-exponential growth when its quadratic
    coefficient exceeds ``quad_ratio`` times the magnitude of the linear one.
    """
    t = traj.times
    sel = (t >= window[0] - 1e-12) & (t <= window[1] + 1e-12)
    if np.count_nonzero(sel) < 3:
        raise ValueError("need at least three snapshots in the growth window")
    ts = t[sel]
    y = np.log([weighted_norm(s, spec) for s, keep in zip(traj.snapshots, sel) if keep])
    b1, _ = np.polynomial.polynomial.polyfit(ts, y, 1)[::-1]
    slope = max(float(b1), 0.0)
    intercept = float(np.max(y - slope * ts))
    c = np.polynomial.polynomial.polyfit(ts, y, 2)
    bounded = bool(np.all(y <= intercept + slope * ts + 1e-12))
    return GrowthFit(float(b1), slope, intercept, float(c[1]), float(c[2]), bounded,
                     bool(c[2] >= quad_ratio * abs(c[1])))


# --- sampled mollifier inequalities ------------------------------------------------

def _central(fn, x, h):
    # fourth-order central difference, Richardson-extrapolated to sixth order
    def d4(step):
        return (fn(x - 2 * step) - 8 * fn(x - step) + 8 * fn(x + step) - fn(x + 2 * step)) / (12 * step)
    return (16.0 * d4(0.5 * h) - d4(h)) / 15.0


def mollifier_inequality_probe(rng: np.random.Generator, n: int = 10000, c0: float = 1.0,
                               alpha: float = 1.0, poly: Optional[PolyMollifierParams] = None,
                               t_max: float = 1.0, xi_max: float = 32.0,
                               fd_rtol: float = 1e-6) -> Dict[str, float]:
    """Random ``(t, xi, theta, delta)`` samples checked against the mollifier
    bounds. Returns violation counts and the largest finite-difference errors."""
    from .spectral import g_delta, g_delta_dt, g_delta_dxi, m_delta, m_delta_dt

    poly = poly or PolyMollifierParams(2.0, 1.0)
    t = rng.uniform(0.0, t_max, n)
    xi = rng.uniform(-xi_max, xi_max, n)
    th = rng.uniform(-np.pi / 2, np.pi / 2, n)
    dl = rng.uniform(1e-3, 1.0 - 1e-3, n)
    out: Dict[str, float] = {"n_samples": float(n)}

    gvals = np.empty(n)
    dt_bad = dx_bad = 0
    prod = np.empty(n)
    prod_rhs = np.empty(n)
    dt_err = np.empty(n)
    dx_err = np.empty(n)
    for k in range(n):
        mp = ExpMollifierParams(c0, alpha, dl[k])
        gvals[k] = g_delta(t[k], xi[k], mp)
        prod[k] = gvals[k]
        prod_rhs[k] = 3.0 * g_delta(t[k], xi[k] * np.cos(th[k]), mp) * g_delta(t[k], xi[k] * np.sin(th[k]), mp)
        cf_t = g_delta_dt(t[k], xi[k], mp)
        cf_x = g_delta_dxi(t[k], xi[k], mp)
        jx = np.sqrt(1.0 + xi[k] ** 2)
        # steps follow the local rates of the exponent c0 t <xi>^alpha; errors
        # are measured against the bound, the natural size of each derivative
        rate_t = c0 * jx ** alpha
        rate_x = alpha * c0 * t[k] * jx ** (alpha - 1)
        ht = 0.05 / rate_t
        tc = max(t[k], 2 * ht)  # keep the stencil inside t >= 0
        fd_t = _central(lambda s: g_delta(s, xi[k], mp), tc, ht)
        cf_tc = g_delta_dt(tc, xi[k], mp)
        hx = 0.05 * min(jx, 1.0 / max(rate_x, 1e-12))
        fd_x = _central(lambda x: g_delta(t[k], x, mp), xi[k], hx)
        gc = g_delta(tc, xi[k], mp)
        dt_err[k] = abs(fd_t - cf_tc) / max(rate_t * gc, 1e-8 * gc)
        dx_err[k] = abs(fd_x - cf_x) / max(rate_x * gvals[k], 1e-8 * gvals[k])
        if abs(cf_t) > rate_t * gvals[k] * (1 + 1e-12):
            dt_bad += 1
        if abs(cf_x) > rate_x * gvals[k] * (1 + 1e-12):
            dx_bad += 1
    out["product_bound_violations"] = float(np.count_nonzero(prod > prod_rhs * (1 + 1e-12)))
    out["product_bound_max_ratio"] = float(np.max(prod / prod_rhs) * 3.0)
    out["dt_bound_violations"] = float(dt_bad)
    out["dxi_bound_violations"] = float(dx_bad)
    out["dt_fd_max_rel_err"] = float(np.max(dt_err))
    out["dxi_fd_max_rel_err"] = float(np.max(dx_err))
    out["fd_violations"] = float(np.count_nonzero(dt_err > fd_rtol) + np.count_nonzero(dx_err > fd_rtol))

    # polynomial mollifier time bound, t restricted to [0, T0]
    tp = rng.uniform(0.0, poly.T0, n)
    m_bad = 0
    m_err = np.empty(n)
    for k in range(n):
        pp = PolyMollifierParams(poly.N, poly.T0, dl[k])
        m = m_delta(tp[k], xi[k], pp)
        cf = m_delta_dt(tp[k], xi[k], pp)
        rate = max(poly.N * np.log(np.sqrt(1.0 + xi[k] ** 2)), 1.0)
        h = min(0.05 / rate, poly.T0 / 8)
        tc = min(max(tp[k], 2 * h), poly.T0 - 2 * h)
        fd = _central(lambda s: m_delta(s, xi[k], pp), tc, h)
        cfc = m_delta_dt(tc, xi[k], pp)
        mc = m_delta(tc, xi[k], pp)
        m_err[k] = abs(fd - cfc) / max(poly.N * np.log(np.sqrt(1.0 + xi[k] ** 2)) * mc, 1e-8 * mc)
        if abs(cf) > poly.N * np.log(np.sqrt(1.0 + xi[k] ** 2)) * m * (1 + 1e-12) + 1e-15 * m:
            m_bad += 1
    out["poly_dt_bound_violations"] = float(m_bad)
    out["poly_dt_fd_max_rel_err"] = float(np.max(m_err))
    out["fd_violations"] += float(np.count_nonzero(m_err > fd_rtol))
    return out

"""Command-line front end: ``kacspec <subcommand> --config <path> [--out <dir>] [--seed <int>]``.

Every subcommand writes its tables as CSV and a ``<subcommand>_summary.json``
into the output directory, together with ``config.effective.txt`` (all keys
with their effective values). Floats are written with 17 significant digits
and no timings are recorded, so reruns are byte-identical.

Exit status: 0 all enabled checks passed, 1 invariant breach, 2 configuration
error, 3 runtime error. On a nonzero exit a JSON error block goes to stderr
and to ``error.json``.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.interpolate import CubicSpline

from .collision import VelocityGrid, build_quadrature, collision_rhs, velocity_space_transform
from .config import ConfigError, RunConfig, effective_config_text, parse_config
from .data import initial_state, read_two_columns
from .diagnostics import (ProbeSpec, PsiBoundParams, coercivity_ratio, delta_sweep,
                          delta_uniformity, dissipation_ratio, fit_psi_constants, gamma_for,
                          mollifier_inequality_probe, psi_bound_check, psi_series,
                          smoothing_exponent_fit)
from .integrator import (ConservationError, IntegratorConfig, MASS_DRIFT_LIMIT, RhsContext,
                         StiffnessError, Trajectory, evolve)
from .radial3d import (LiftedSpectrum, RadialProfile3D, marginal_moment, marginal_transform,
                       reduce_profile, uniform_ball_profile)
from .spectral import (CrossSectionParams, ExpMollifierParams, FourierGrid, PolyMollifierParams,
                       SpectralState, WeightedNormSpec)

EXIT_OK, EXIT_BREACH, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3
# reduction identities are exact for the discrete representation; allow round-off
IDENTITY_TOL = 1e-8

Check = Tuple[str, bool, str]


class InvariantBreach(RuntimeError):
    def __init__(self, message: str, checks: List[Check]):
        super().__init__(message)
        self.checks = checks


# --- deterministic emission -------------------------------------------------

def fmt_float(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.16e}"


def _json(obj, indent: int = 0) -> str:
    # json.dumps cannot fix the float format, so scalars are formatted here
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {_json(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(_json(v) for v in seq) + "]"
        return "[\n" + ",\n".join(inner + _json(v, indent + 1) for v in seq) + "\n" + pad + "]"
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        # non-finite values are not JSON numbers; emit them as strings
        return json.dumps(fmt_float(v)) if not math.isfinite(v) else fmt_float(v)
    return json.dumps(str(obj))


def write_json(path: Path, obj) -> None:
    path.write_text(_json(obj) + "\n", encoding="utf-8")


def write_csv(path: Path, header: List[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt_float(v) if isinstance(v, (float, np.floating)) else v for v in row])


# --- shared builders ----------------------------------------------------------

def _grid(cfg: RunConfig) -> FourierGrid:
    return FourierGrid(cfg.xi_max, cfg.n_xi)


def _params(cfg: RunConfig) -> CrossSectionParams:
    return CrossSectionParams(cfg.s, cfg.b0, cfg.angle_map, cfg.theta_cut)


def _quadrature(cfg: RunConfig, p: CrossSectionParams):
    return build_quadrature(p, cfg.n_theta, cfg.quadrature)


def _initial(cfg: RunConfig, grid: FourierGrid) -> SpectralState:
    return initial_state(cfg.initial, grid, cfg.datum_file, cfg.datum_columns, cfg.ball_radius)


def _gaussian(grid: FourierGrid) -> SpectralState:
    return SpectralState.from_function(grid, lambda x: np.exp(-0.5 * x * x))


def _norm_name(spec: WeightedNormSpec) -> str:
    return f"H{spec.sobolev_index:g}_{spec.weight_power}"


def _run_trajectory(cfg: RunConfig) -> Tuple[Trajectory, RhsContext]:
    grid = _grid(cfg)
    p = _params(cfg)
    ctx = RhsContext(p, _quadrature(cfg, p), cfg.interp)
    icfg = IntegratorConfig(cfg.dt_init, cfg.dt_max, cfg.safety, cfg.abs_tol, cfg.rel_tol,
                            cfg.t_end, cfg.output_every)
    probes = ProbeSpec(tuple(WeightedNormSpec(k, l) for k, l in cfg.norms),
                       cfg.fit_alpha, (cfg.fit_lo, cfg.fit_hi))
    traj = evolve(_initial(cfg, grid), icfg, ctx, probes,
                  mass_limit=max(MASS_DRIFT_LIMIT, cfg.mass_tol))
    return traj, ctx


def read_trajectory_csv(path) -> Trajectory:
    """Trajectory from a ``t, xi, f_hat`` CSV; rows grouped by ``t`` in file order."""
    groups: Dict[float, List[Tuple[float, float]]] = {}
    order: List[float] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:3]] != ["t", "xi", "f_hat"]:
            raise ValueError(f"{path}: expected header 't,xi,f_hat'")
        for k, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                t, x, f = (float(v) for v in row[:3])
            except ValueError:
                raise ValueError(f"{path}:{k}: non-numeric row {row!r}") from None
            if t not in groups:
                groups[t] = []
                order.append(t)
            groups[t].append((x, f))
    if not order:
        raise ValueError(f"{path}: no data rows")
    xi0 = np.array([x for x, _ in groups[order[0]]])
    grid = FourierGrid(float(xi0[-1]), xi0.size)
    if xi0[0] != 0.0 or not np.allclose(xi0, grid.nodes, rtol=0, atol=1e-12 * grid.xi_max):
        raise ValueError(f"{path}: xi must be a uniform grid starting at 0")
    snaps = []
    for t in order:
        xs = np.array([x for x, _ in groups[t]])
        if xs.shape != xi0.shape or not np.array_equal(xs, xi0):
            raise ValueError(f"{path}: snapshot t={t} uses a different xi grid")
        snaps.append(SpectralState(grid, np.array([f for _, f in groups[t]]), t))
    return Trajectory(snaps)


def _trajectory(cfg: RunConfig) -> Trajectory:
    if cfg.trajectory_file is not None:
        return read_trajectory_csv(cfg.trajectory_file)
    return _run_trajectory(cfg)[0]


# --- subcommands -----------------------------------------------------------------

def cmd_simulate(cfg: RunConfig, out: Path) -> List[Check]:
    traj, ctx = _run_trajectory(cfg)
    xi = traj.grid.nodes
    write_csv(out / "trajectory.csv", ["t", "xi", "f_hat"],
              ((s.time, x, v) for s in traj.snapshots for x, v in zip(xi, s.values)))
    recs = traj.diagnostics
    mass = max(abs(r.mass_drift) for r in recs)
    energy = max(abs(r.energy_drift) for r in recs)
    summary = {
        "subcommand": "simulate",
        "n_snapshots": len(recs),
        "rhs_evaluations": ctx.n_evals,
        "max_abs_mass_drift": mass,
        "max_abs_energy_drift": energy,
        "snapshots": [{"t": r.time, "mass_drift": r.mass_drift, "energy_drift": r.energy_drift,
                       "norms": {_norm_name(k): v for k, v in r.sobolev_norms.items()},
                       "fitted_c": r.fitted_c, "fit_residual": r.fit_residual} for r in recs],
    }
    checks = [("mass_drift", mass <= cfg.mass_tol, f"{mass:.3e} <= {cfg.mass_tol:g}"),
              ("energy_drift", energy <= cfg.energy_tol, f"{energy:.3e} <= {cfg.energy_tol:g}")]
    summary["checks"] = _check_block(checks)
    write_json(out / "simulate_summary.json", summary)
    return checks


def cmd_fit_smoothing(cfg: RunConfig, out: Path) -> List[Check]:
    traj = _trajectory(cfg)
    fits = smoothing_exponent_fit(traj, cfg.fit_alpha, (cfg.fit_lo, cfg.fit_hi))
    write_csv(out / "smoothing.csv", ["t", "c_t", "residual"],
              ((f.t, f.c, f.residual) for f in fits))
    later = [f for f in fits if f.t > 0]
    positive = all(f.c > 0 for f in later)
    monotone = all(b.c >= a.c - 1.5 * max(a.residual, b.residual) for a, b in zip(later, later[1:]))
    checks = [("c_positive", positive, "c(t) > 0 for every t > 0"),
              ("c_nondecreasing", monotone, "c(t) nondecreasing within 1.5x the fit residual")]
    write_json(out / "fit-smoothing_summary.json", {
        "subcommand": "fit-smoothing", "alpha": cfg.fit_alpha, "window": [cfg.fit_lo, cfg.fit_hi],
        "fits": [{"t": f.t, "c": f.c, "residual": f.residual, "xi_hi": f.xi_hi} for f in fits],
        "checks": _check_block(checks)})
    return checks


def _commutator_cases(cfg: RunConfig):
    exp = ExpMollifierParams(cfg.c0, cfg.alpha, cfg.delta)
    poly = PolyMollifierParams(cfg.poly_N, cfg.poly_T0, cfg.delta)
    cases = [("exp", exp, cfg.exp_t, 0)]
    if cfg.s >= 0.5:
        cases.append(("exp", exp, cfg.exp_t, 1))
    cases.append(("poly", poly, cfg.poly_t, 0))
    if cfg.s >= 0.5:
        cases.append(("poly", poly, cfg.poly_t, 2))
    return cases


def cmd_check_commutators(cfg: RunConfig, out: Path) -> List[Check]:
    from .diagnostics import commutator_residual
    grid = _grid(cfg)
    p = _params(cfg)
    q = _quadrature(cfg, p)
    G = _gaussian(grid)
    rows, summary_rows, checks = [], [], []
    for kind, params, t, ell in _commutator_cases(cfg):
        sweep = delta_sweep(kind, params, t, ell, G, G, G, p, q, cfg.deltas,
                            alpha_prime=cfg.alpha_prime)
        pid = commutator_residual((kind, params, t), ell, G, G, G, p, q,
                                  alpha_prime=cfg.alpha_prime)[1].pairing
        rows.extend((pid, d, r) for d, r in sweep)
        spread, runaway = delta_uniformity([r for _, r in sweep])
        ok = spread < cfg.commutator_spread_tol and not runaway
        checks.append((f"uniform_{pid}", ok,
                       f"spread {spread:.3e} < {cfg.commutator_spread_tol:g}, runaway={runaway}"))
        summary_rows.append({"pairing": pid, "t": t, "spread": spread, "runaway": runaway})
    write_csv(out / "commutators.csv", ["pairing", "delta", "ratio"], rows)

    rng = np.random.default_rng(cfg.rng_seed)
    probe = mollifier_inequality_probe(rng, cfg.n_samples, cfg.c0, cfg.alpha,
                                       PolyMollifierParams(cfg.poly_N, cfg.poly_T0),
                                       t_max=cfg.poly_T0, xi_max=cfg.xi_max)
    write_json(out / "mollifier_probe.json", probe)
    for key in ("product_bound_violations", "dt_bound_violations", "dxi_bound_violations",
                "poly_dt_bound_violations", "fd_violations"):
        checks.append((key, probe[key] == 0, f"{int(probe[key])} of {cfg.n_samples}"))
    write_json(out / "check-commutators_summary.json", {
        "subcommand": "check-commutators", "pairings": summary_rows, "checks": _check_block(checks)})
    return checks


def cmd_check_coercivity(cfg: RunConfig, out: Path) -> List[Check]:
    grid = _grid(cfg)
    p = _params(cfg)
    q = _quadrature(cfg, p)
    f = _gaussian(grid)
    rows = []
    for k in sorted(cfg.coercivity_bands):
        g = SpectralState.from_function(
            grid, lambda x, k=k: np.exp(-0.5 * (x - k) ** 2) + np.exp(-0.5 * (x + k) ** 2))
        est = coercivity_ratio(f, g, p, q)
        rows.append((float(k), est.c_f_estimate, est.correction, dissipation_ratio(f, g, p, q)))
    write_csv(out / "coercivity.csv", ["band", "c_f_estimate", "correction", "dissipation_ratio"], rows)
    diss = [r[3] for r in rows]
    checks = [("c_f_positive", all(r[1] > 0 for r in rows), "coercivity estimate positive in every band"),
              ("dissipation_nondecreasing", all(b >= a for a, b in zip(diss, diss[1:])),
               "dissipation ratio nondecreasing with band frequency")]
    write_json(out / "check-coercivity_summary.json", {
        "subcommand": "check-coercivity", "loss_mass": q.loss_mass(p), "checks": _check_block(checks)})
    return checks


def velocity_density(cfg: RunConfig, v: np.ndarray) -> np.ndarray:
    """Velocity-space density matching the configured initial datum."""
    if cfg.initial == "gaussian":
        return np.exp(-0.5 * v * v) / np.sqrt(2.0 * np.pi)
    if cfg.initial == "laplace":
        return 0.5 * np.exp(-np.abs(v))
    if cfg.initial == "uniform_ball_3d":
        R = cfg.ball_radius
        return 0.75 / R ** 3 * np.clip(R * R - v * v, 0.0, None)
    if cfg.datum_columns != "velocity":
        raise ValueError("oracle-compare needs a velocity-space table (datum_columns = velocity)")
    x, y = read_two_columns(cfg.datum_file)
    spl = CubicSpline(x, y, bc_type="not-a-knot")
    a = np.abs(v)
    return np.where(a <= x[-1], spl(np.minimum(a, x[-1])), 0.0)


def cmd_oracle_compare(cfg: RunConfig, out: Path) -> List[Check]:
    grid = _grid(cfg)
    p = _params(cfg)
    q = _quadrature(cfg, p)
    spectral = collision_rhs(_initial(cfg, grid), q, p, cfg.interp)
    vg = VelocityGrid(cfg.v_max, cfg.n_v + 1)
    sel = grid.nodes <= cfg.oracle_xi_max * (1 + 1e-12)
    xi = grid.nodes[sel]
    oracle = velocity_space_transform(velocity_density(cfg, vg.nodes), vg, xi, q, p)
    diff = np.abs(spectral[sel] - oracle)
    write_csv(out / "oracle.csv", ["xi", "spectral", "velocity", "abs_diff"],
              zip(xi, spectral[sel], oracle, diff))
    worst = float(diff.max())
    checks = [("oracle_discrepancy", worst < cfg.oracle_tol, f"{worst:.3e} < {cfg.oracle_tol:g}")]
    write_json(out / "oracle-compare_summary.json", {
        "subcommand": "oracle-compare", "max_abs_discrepancy": worst,
        "xi_at_max": float(xi[int(diff.argmax())]), "checks": _check_block(checks)})
    return checks


def _profile(cfg: RunConfig) -> Tuple[RadialProfile3D, Callable]:
    if cfg.profile == "gaussian":
        prof = RadialProfile3D.from_function(lambda r: (2 * np.pi) ** -1.5 * np.exp(-0.5 * r * r),
                                             cfg.r_max, cfg.n_r)
        return prof, lambda u: np.exp(-0.5 * u * u) / np.sqrt(2 * np.pi)
    R = cfg.ball_radius
    prof = uniform_ball_profile(R, cfg.r_max, cfg.n_r)
    return prof, lambda u: 0.75 / R ** 3 * np.clip(R * R - u * u, 0.0, None)


def cmd_reduce_3d(cfg: RunConfig, out: Path) -> List[Check]:
    prof, closed = _profile(cfg)
    u = prof.r_grid
    F = reduce_profile(prof, u)
    err = np.abs(F - closed(u))
    write_csv(out / "marginal.csv", ["u", "F", "F_closed", "abs_err"], zip(u, F, closed(u), err))

    grid = _grid(cfg)
    F_hat = marginal_transform(prof, grid.nodes)
    node_err = float(np.max(np.abs(F_hat - prof.transform(grid.nodes))))
    lifted = LiftedSpectrum(SpectralState(grid, F_hat), "cubic")
    rng = np.random.default_rng(cfg.rng_seed)
    pts = rng.normal(size=(256, 3))
    pts *= (rng.uniform(0.0, grid.xi_max, 256) / np.linalg.norm(pts, axis=1))[:, None]
    off_err = float(np.max(np.abs(lifted(pts) - prof.transform(np.linalg.norm(pts, axis=1)))))
    norm_sq = lifted.gevrey_norm_sq(cfg.shell_c0)

    m3, m1 = prof.mass(), marginal_moment(prof, 0)
    e3, e1 = prof.moment(2), marginal_moment(prof, 2)
    mass_err = abs(m1 / m3 - 1.0)
    moment_err = abs(3.0 * e1 / e3 - 1.0)
    checks = [("closed_form", float(err.max()) < cfg.reduce_tol, f"{err.max():.3e} < {cfg.reduce_tol:g}"),
              ("mass_equality", mass_err < IDENTITY_TOL, f"{mass_err:.3e} < {IDENTITY_TOL:g}"),
              ("second_moment_third", moment_err < IDENTITY_TOL, f"{moment_err:.3e} < {IDENTITY_TOL:g}"),
              ("round_trip_nodes", node_err < cfg.reduce_tol, f"{node_err:.3e} < {cfg.reduce_tol:g}")]
    write_json(out / "reduce-3d_summary.json", {
        "subcommand": "reduce-3d", "profile": cfg.profile, "r_max": prof.R, "n_r": u.size,
        "mass_3d": m3, "mass_marginal": m1, "second_moment_3d": e3, "second_moment_marginal": e1,
        "closed_form_max_err": float(err.max()), "round_trip_node_err": node_err,
        "round_trip_offgrid_err": off_err, "lifted_norm_sq": norm_sq,
        "lifted_norm": math.sqrt(norm_sq), "checks": _check_block(checks)})
    return checks


def cmd_psi_bound(cfg: RunConfig, out: Path) -> List[Check]:
    traj = _trajectory(cfg)
    mp = ExpMollifierParams(cfg.c0, cfg.alpha, cfg.delta)
    gamma = cfg.gamma if cfg.gamma is not None else gamma_for(cfg.s, cfg.alpha_prime)
    psi = psi_series(traj, mp)
    c1, c2 = fit_psi_constants(traj.times, psi, gamma)
    c1 = cfg.C1 if cfg.C1 is not None else c1
    c2 = cfg.C2 if cfg.C2 is not None else c2
    pb = PsiBoundParams(c1, c2, gamma, float(psi[0]))
    rep = psi_bound_check(traj, mp, pb)
    write_csv(out / "psi.csv", ["t", "psi", "bound", "final_lhs", "final_rhs"],
              zip(rep.times, rep.psi, rep.bound, rep.final_lhs, rep.final_rhs))
    checks = [("psi_below_bound", rep.holds, "psi(t) <= closed-form bound for t < T*"),
              ("final_form", rep.final_holds, "unmollified norm <= 2 e^{C1 t} ||f0|| for t <= T_half")]
    write_json(out / "psi-bound_summary.json", {
        "subcommand": "psi-bound", "C1": c1, "C2": c2, "gamma": gamma, "psi0": float(psi[0]),
        "t_star": rep.t_star, "t_half": rep.t_half, "exceeded_t_star": rep.exceeded_t_star,
        "delta_refinement": {fmt_float(d): v for d, v in rep.delta_refinement.items()},
        "checks": _check_block(checks)})
    return checks


SUBCOMMANDS: Dict[str, Callable[[RunConfig, Path], List[Check]]] = {
    "simulate": cmd_simulate,
    "fit-smoothing": cmd_fit_smoothing,
    "check-commutators": cmd_check_commutators,
    "check-coercivity": cmd_check_coercivity,
    "oracle-compare": cmd_oracle_compare,
    "reduce-3d": cmd_reduce_3d,
    "psi-bound": cmd_psi_bound,
}


# --- driver --------------------------------------------------------------------------

def _check_block(checks: List[Check]):
    return [{"name": n, "passed": bool(ok), "detail": d} for n, ok, d in checks]


def _resolve(path: Optional[str], base: Path) -> Optional[str]:
    if path is None:
        return None
    p = Path(path)
    return str(p if p.is_absolute() else base / p)


def load_config(path, out: Optional[str] = None, seed: Optional[int] = None) -> RunConfig:
    """Parse a config file; overrides from the command line win. Relative
    file paths in the config are taken relative to the config file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    cfg = parse_config(text)
    base = path.parent
    cfg = replace(cfg, datum_file=_resolve(cfg.datum_file, base),
                  trajectory_file=_resolve(cfg.trajectory_file, base))
    if out is not None:
        cfg = replace(cfg, out_dir=out)
    if seed is not None:
        cfg = replace(cfg, rng_seed=seed)
    return cfg


def _fail(out: Optional[Path], kind: str, sub: str, message: str, checks=None) -> None:
    block = {"error": {"kind": kind, "subcommand": sub, "message": message}}
    if checks:
        block["error"]["checks"] = _check_block(checks)
    text = _json(block) + "\n"
    sys.stderr.write(text)
    if out is not None:
        try:
            out.mkdir(parents=True, exist_ok=True)
            (out / "error.json").write_text(text, encoding="utf-8")
        except OSError:
            pass


def run_subcommand(name: str, cfg: RunConfig) -> int:
    out = Path(cfg.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        stale = out / "error.json"
        if stale.exists():
            stale.unlink()
        (out / "config.effective.txt").write_text(effective_config_text(cfg), encoding="utf-8")
        checks = SUBCOMMANDS[name](cfg, out)
    except ConservationError as exc:
        _fail(out, "invariant_breach", name, str(exc))
        return EXIT_BREACH
    except ConfigError as exc:
        _fail(out, "config_error", name, str(exc))
        return EXIT_CONFIG
    except (StiffnessError, ValueError, OSError, FloatingPointError) as exc:
        _fail(out, "runtime_error", name, f"{type(exc).__name__}: {exc}")
        return EXIT_RUNTIME
    failed = [c for c in checks if not c[1]]
    if failed and cfg.check_invariants:
        _fail(out, "invariant_breach", name,
              "failed checks: " + ", ".join(c[0] for c in failed), checks)
        return EXIT_BREACH
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kacspec",
                                 description="Spectral Kac-equation simulator and verification harness.")
    ap.add_argument("subcommand", choices=list(SUBCOMMANDS))
    ap.add_argument("--config", required=True, help="flat key = value configuration file")
    ap.add_argument("--out", default=None, help="output directory (overrides out_dir)")
    ap.add_argument("--seed", type=int, default=None, help="rng seed (overrides rng_seed)")
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.out, args.seed)
    except ConfigError as exc:
        _fail(Path(args.out) if args.out else None, "config_error", args.subcommand, str(exc))
        return EXIT_CONFIG
    return run_subcommand(args.subcommand, cfg)


if __name__ == "__main__":
    sys.exit(main())

"""Flat ``key = value`` run configuration with line-cited errors."""
from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Any, Callable, Dict, Optional, Tuple


class ConfigError(ValueError):
    pass


def _choice(*options):
    def check(v):
        if v not in options:
            return f"must be one of {', '.join(options)}"
    return check


def _positive(v):
    if not v > 0:
        return "must be positive"


def _nonneg(v):
    if v < 0:
        return "must be nonnegative"


def _open_unit(v):
    if not 0 < v < 1:
        return "must lie in (0, 1)"


def _interval(lo, hi, lo_open=True, hi_open=True, why=""):
    def check(v):
        ok_lo = v > lo if lo_open else v >= lo
        ok_hi = v < hi if hi_open else v <= hi
        if not (ok_lo and ok_hi):
            return (f"must satisfy {lo} {'<' if lo_open else '<='} value "
                    f"{'<' if hi_open else '<='} {hi}{why}")
    return check


def _min_int(n):
    def check(v):
        if v < n:
            return f"must be >= {n}"
    return check




def _float_list(text: str) -> Tuple[float, ...]:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _norm_list(text: str) -> Tuple[Tuple[float, int], ...]:
    out = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        k, _, l = item.partition(":")
        out.append((float(k), int(l)))
    return tuple(out)


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _opt_float(text: str) -> Optional[float]:
    t = text.strip().lower()
    return None if t in ("auto", "none", "") else float(text)


def _opt_str(text: str) -> Optional[str]:
    t = text.strip()
    return None if t.lower() in ("none", "") else t


def _fmt(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        if v and isinstance(v[0], tuple):
            return ", ".join(f"{repr(float(k))}:{l}" for k, l in v)
        return ", ".join(repr(float(x)) for x in v)
    return str(v)


# name -> (parser, default, validator, description)
SCHEMA: Dict[str, Tuple[Callable[[str], Any], Any, Optional[Callable], str]] = {
    # cross-section and angular quadrature
    "s": (float, 0.75, _interval(0, 1, why=" (singularity exponent of the angular kernel, 0 < s < 1)"),
          "singularity exponent"),
    "b0": (float, 1.0, _positive, "kernel strength"),
    "angle_map": (str, "full_angle", _choice("full_angle", "half_angle"), "angle map"),
    "theta_cut": (float, 1e-4, _interval(0, 0.39269908169872414), "angular cutoff epsilon"),
    "n_theta": (int, 128, _min_int(16), "angular nodes"),
    "quadrature": (str, "gauss_panels", _choice("gauss_panels", "graded_trapezoid"), "angular rule"),
    "interp": (str, "auto", _choice("auto", "cubic", "log_cubic"), "Fourier interpolation"),
    # frequency grid
    "xi_max": (float, 32.0, _positive, "frequency cutoff"),
    "n_xi": (int, 257, _min_int(9), "frequency nodes"),
    # integrator
    "dt_init": (float, 1e-3, _positive, "initial step"),
    "dt_max": (float, 2e-2, _positive, "largest step"),
    "safety": (float, 0.9, _interval(0, 1, hi_open=False), "step controller safety"),
    "abs_tol": (float, 1e-300, _positive, "absolute step tolerance"),
    "rel_tol": (float, 1e-6, _positive, "relative step tolerance"),
    "t_end": (float, 0.5, _nonneg, "final time"),
    "output_every": (float, 0.05, _positive, "snapshot interval"),
    # initial datum
    "initial": (str, "laplace", _choice("gaussian", "laplace", "uniform_ball_3d", "tabulated"),
                "initial datum"),
    "datum_file": (_opt_str, None, None, "CSV for the tabulated datum"),
    "datum_columns": (str, "fourier", _choice("fourier", "velocity"), "tabulated column kind"),
    "ball_radius": (float, 1.0, _positive, "radius of the uniform ball"),
    # mollifiers
    "c0": (float, 1.0, _positive, "exponential mollifier rate"),
    "alpha": (float, 1.0, _interval(0, 2), "exponential mollifier power"),
    "delta": (float, 0.01, _open_unit, "mollifier saturation"),
    "poly_N": (float, 2.0, _positive, "polynomial mollifier order rate"),
    "poly_T0": (float, 1.0, _positive, "polynomial mollifier time horizon"),
    "exp_t": (float, 0.1, _nonneg, "time at which the exponential mollifier is probed"),
    "poly_t": (float, 0.1, _nonneg, "time at which the polynomial mollifier is probed"),
    "alpha_prime": (float, 0.5, _open_unit, "auxiliary exponent for s = 1/2 bounds"),
    "deltas": (_float_list, (0.5, 0.25, 0.125, 0.0625), None, "delta refinement schedule"),
    # diagnostics
    "norms": (_norm_list, ((0.0, 0), (2.0, 2)), None, "weighted norms k:l recorded per snapshot"),
    "fit_alpha": (float, 1.0, _interval(0, 1, hi_open=False), "smoothing fit power"),
    "fit_lo": (float, 5.0, _nonneg, "smoothing fit window start"),
    "fit_hi": (float, 25.0, _positive, "smoothing fit window end"),
    "trajectory_file": (_opt_str, None, None, "CSV trajectory (t, xi, f_hat) for fit-smoothing"),
    "check_invariants": (_bool, True, None, "fail the run on invariant breaches"),
    "mass_tol": (float, 1e-9, _positive, "allowed relative mass drift"),
    "energy_tol": (float, 5e-3, _positive,
                   "allowed relative energy drift (the 5-point stencil at xi = 0 has O(h^4) error, ~1e-3 for laplace at h = 1/8)"),
    "commutator_spread_tol": (float, 0.25, _positive, "allowed max/min - 1 of commutator ratios"),
    "n_samples": (int, 10000, _min_int(1), "random points for mollifier inequality probes"),
    "coercivity_bands": (_float_list, (0.0, 2.0, 4.0, 8.0, 16.0), None, "oscillation frequencies"),
    # velocity oracle
    "n_v": (int, 512, _min_int(8), "velocity intervals for the oracle"),
    "v_max": (float, 30.0, _positive, "velocity box half-width"),
    "oracle_xi_max": (float, 8.0, _positive, "largest compared frequency"),
    "oracle_tol": (float, 1e-4, _positive, "allowed oracle discrepancy"),
    # radial 3D
    "profile": (str, "gaussian", _choice("gaussian", "uniform_ball"), "3D radial profile"),
    "r_max": (float, 10.0, _positive, "radial box"),
    "n_r": (int, 2049, _min_int(3), "radial nodes"),
    "shell_c0": (float, 1.0, _nonneg, "weight rate of the lifted shell norm"),
    "reduce_tol": (float, 1e-6, _positive, "closed-form and round-trip tolerance"),
    # psi bound
    "gamma": (_opt_float, None, None, "psi growth exponent (auto from s)"),
    "C1": (_opt_float, None, None, "psi linear constant (auto: fitted)"),
    "C2": (_opt_float, None, None, "psi nonlinear constant (auto: fitted)"),
    # io
    "out_dir": (str, "out", None, "output directory"),
    "rng_seed": (int, 0, None, "seed for sampled probes"),
}


@dataclass(frozen=True)
class RunConfig:
    s: float = 0.75
    b0: float = 1.0
    angle_map: str = "full_angle"
    theta_cut: float = 1e-4
    n_theta: int = 128
    quadrature: str = "gauss_panels"
    interp: str = "auto"
    xi_max: float = 32.0
    n_xi: int = 257
    dt_init: float = 1e-3
    dt_max: float = 2e-2
    safety: float = 0.9
    abs_tol: float = 1e-300
    rel_tol: float = 1e-6
    t_end: float = 0.5
    output_every: float = 0.05
    initial: str = "laplace"
    datum_file: Optional[str] = None
    datum_columns: str = "fourier"
    ball_radius: float = 1.0
    c0: float = 1.0
    alpha: float = 1.0
    delta: float = 0.01
    poly_N: float = 2.0
    poly_T0: float = 1.0
    exp_t: float = 0.1
    poly_t: float = 0.1
    alpha_prime: float = 0.5
    deltas: Tuple[float, ...] = (0.5, 0.25, 0.125, 0.0625)
    norms: Tuple[Tuple[float, int], ...] = ((0.0, 0), (2.0, 2))
    fit_alpha: float = 1.0
    fit_lo: float = 5.0
    fit_hi: float = 25.0
    trajectory_file: Optional[str] = None
    check_invariants: bool = True
    mass_tol: float = 1e-9
    energy_tol: float = 5e-3
    commutator_spread_tol: float = 0.25
    n_samples: int = 10000
    coercivity_bands: Tuple[float, ...] = (0.0, 2.0, 4.0, 8.0, 16.0)
    n_v: int = 512
    v_max: float = 30.0
    oracle_xi_max: float = 8.0
    oracle_tol: float = 1e-4
    profile: str = "gaussian"
    r_max: float = 10.0
    n_r: int = 2049
    shell_c0: float = 1.0
    reduce_tol: float = 1e-6
    gamma: Optional[float] = None
    C1: Optional[float] = None
    C2: Optional[float] = None
    out_dir: str = "out"
    rng_seed: int = 0


assert [f.name for f in fields(RunConfig)] == list(SCHEMA), "schema and RunConfig out of sync"
assert all(f.default == SCHEMA[f.name][1] for f in fields(RunConfig))


def parse_config(text: str) -> RunConfig:
    """Parse and validate; every error names the offending line."""
    seen: Dict[str, int] = {}
    values: Dict[str, Any] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, eq, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if not eq or not key:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        if key not in SCHEMA:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r} (first set on line {seen[key]})")
        seen[key] = lineno
        parser, _, check, _ = SCHEMA[key]
        try:
            v = parser(val)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from None
        if check is not None:
            msg = check(v)
            if msg:
                raise ConfigError(f"line {lineno}: {key} = {val} out of range: {msg}")
        values[key] = v
    cfg = RunConfig(**values)
    _cross_checks(cfg, seen)
    return cfg


def _cross_checks(cfg: RunConfig, lines: Dict[str, int]):
    def where(*keys):
        found = [f"line {lines[k]}" for k in keys if k in lines]
        return ", ".join(found) if found else "defaults"

    if cfg.initial == "tabulated" and cfg.datum_file is None:
        raise ConfigError(f"{where('initial')}: missing required key 'datum_file' for initial = tabulated")
    if cfg.dt_init > cfg.dt_max:
        raise ConfigError(f"{where('dt_init', 'dt_max')}: dt_init must not exceed dt_max")
    if not cfg.fit_lo < cfg.fit_hi <= cfg.xi_max:
        raise ConfigError(f"{where('fit_lo', 'fit_hi', 'xi_max')}: need fit_lo < fit_hi <= xi_max")
    if cfg.oracle_xi_max > cfg.xi_max:
        raise ConfigError(f"{where('oracle_xi_max', 'xi_max')}: oracle_xi_max exceeds xi_max")
    if cfg.poly_t > cfg.poly_T0:
        raise ConfigError(f"{where('poly_t', 'poly_T0')}: poly_t must lie in [0, poly_T0]")
    if cfg.n_v % 2:
        raise ConfigError(f"{where('n_v')}: n_v counts velocity intervals and must be even")
    for k, l in cfg.norms:
        if l not in (0, 1, 2) or k < 0:
            raise ConfigError(f"{where('norms')}: norm spec {k}:{l} needs k >= 0 and l in 0, 1, 2")
    if not cfg.deltas or any(not 0 < d < 1 for d in cfg.deltas):
        raise ConfigError(f"{where('deltas')}: every delta must lie in (0, 1)")


def effective_config_text(cfg: RunConfig) -> str:
    """Every key with its effective value; reparses to an equal config."""
    return "".join(f"{f.name} = {_fmt(getattr(cfg, f.name))}\n" for f in fields(cfg))

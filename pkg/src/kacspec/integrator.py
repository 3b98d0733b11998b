"""Explicit RK4 time stepping of the Bobylev ODE system on the frequency grid."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .collision import AngularQuadrature, build_quadrature, collision_rhs
from .spectral import CrossSectionParams, SpectralState, conserved_quantities

MASS_DRIFT_LIMIT = 1e-6


class StiffnessError(FloatingPointError):
    """A Runge-Kutta stage produced a non-finite value."""


class ConservationError(RuntimeError):
    """Mass drifted beyond the allowed relative tolerance."""


@dataclass(frozen=True)
class IntegratorConfig:
    dt_init: float = 1e-3
    dt_max: float = 1e-2
    safety: float = 0.9
    abs_tol: float = 1e-10
    rel_tol: float = 1e-8
    t_end: float = 1.0
    output_every: float = 0.1

    def __post_init__(self):
        if not (self.dt_init > 0 and self.dt_max > 0):
            raise ValueError("dt_init and dt_max must be positive")
        if self.dt_init > self.dt_max:
            raise ValueError(f"dt_init={self.dt_init} exceeds dt_max={self.dt_max}")
        if not 0.0 < self.safety <= 1.0:
            raise ValueError("safety must lie in (0, 1]")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.t_end < 0:
            raise ValueError("t_end must be nonnegative")
        if not self.output_every > 0:
            raise ValueError("output_every must be positive")


@dataclass
class RhsContext:
    """Everything the right-hand side needs besides the state."""

    params: CrossSectionParams
    quadrature: Optional[AngularQuadrature] = None
    interp: str = "auto"
    backend: Optional[str] = None
    beta_fn: Optional[Callable] = None
    n_evals: int = field(default=0, init=False)

    def __post_init__(self):
        if self.quadrature is None:
            self.quadrature = build_quadrature(self.params)

    def __call__(self, state: SpectralState) -> np.ndarray:
        self.n_evals += 1
        return collision_rhs(state, self.quadrature, self.params, self.interp,
                             self.backend, beta_fn=self.beta_fn)


@dataclass(frozen=True)
class Trajectory:
    snapshots: List[SpectralState]
    diagnostics: list = field(default_factory=list)

    def __post_init__(self):
        if not self.snapshots:
            raise ValueError("a trajectory needs at least the initial snapshot")
        if self.snapshots[0].time != 0.0:
            raise ValueError("first snapshot must be at t = 0")
        times = np.array([s.time for s in self.snapshots])
        if np.any(np.diff(times) <= 0):
            raise ValueError("snapshot times must be strictly increasing")

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.snapshots])

    @property
    def grid(self):
        return self.snapshots[0].grid


def _stage(state: SpectralState, values, time, rhs) -> np.ndarray:
    if not np.all(np.isfinite(values)):
        raise StiffnessError(
            f"non-finite stage value near t={time:.6g}: the explicit step is unstable; "
            "reduce dt or xi_max (the loss rate grows with the angular quadrature mass, "
            "which grows as theta_cut shrinks)")
    k = rhs(state.with_values(values, time))
    if not np.all(np.isfinite(k)):
        raise StiffnessError(f"right-hand side overflowed near t={time:.6g}; reduce dt or xi_max")
    return k


def step(state: SpectralState, dt: float, rhs) -> SpectralState:
    """One classical RK4 step."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    y, t = state.values, state.time
    with np.errstate(over="ignore", invalid="ignore"):
        k1 = _stage(state, y, t, rhs)
        k2 = _stage(state, y + 0.5 * dt * k1, t + 0.5 * dt, rhs)
        k3 = _stage(state, y + 0.5 * dt * k2, t + 0.5 * dt, rhs)
        k4 = _stage(state, y + dt * k3, t + dt, rhs)
        new = y + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(new)):
        raise StiffnessError(f"step from t={t:.6g} with dt={dt:.3g} overflowed; reduce dt")
    return state.with_values(new, t + dt)


def _error_norm(coarse, fine, cfg: IntegratorConfig) -> float:
    scale = cfg.abs_tol + cfg.rel_tol * np.maximum(np.abs(coarse), np.abs(fine))
    # the coarse/fine difference of RK4 is 15x the error of the fine solution
    return float(np.max(np.abs(fine - coarse) / scale)) / 15.0


def evolve(state: SpectralState, cfg: IntegratorConfig, rhs, probes=None,
           mass_limit: float = MASS_DRIFT_LIMIT) -> Trajectory:
    """Adaptive RK4 with step doubling; snapshots every ``output_every``.

    ``probes`` is a :class:`kacspec.diagnostics.ProbeSpec` (or ``None`` for the
    default conservation-only records).
    """
    from .diagnostics import ProbeSpec, make_record

    probes = probes if probes is not None else ProbeSpec()
    if state.time != 0.0:
        state = state.with_values(state.values, 0.0)
    initial = state
    mass0 = conserved_quantities(initial)[0]
    snaps = [initial]
    records = [make_record(initial, initial, probes)]
    n_out = int(np.floor(cfg.t_end / cfg.output_every + 1e-9))
    targets = [cfg.output_every * (k + 1) for k in range(n_out)]
    if not targets or cfg.t_end - targets[-1] > 1e-12 * max(cfg.t_end, 1.0):
        if cfg.t_end > 0:
            targets.append(cfg.t_end)

    dt = cfg.dt_init
    cur = state
    for target in targets:
        while cur.time < target - 1e-14 * max(target, 1.0):
            h = min(dt, cfg.dt_max, target - cur.time)
            full = step(cur, h, rhs)
            half = step(step(cur, 0.5 * h, rhs), 0.5 * h, rhs)
            err = _error_norm(full.values, half.values, cfg)
            factor = cfg.safety * (1.0 / err) ** 0.2 if err > 0 else 5.0
            factor = min(5.0, max(0.2, factor))
            if err <= 1.0:
                t_new = target if target - (cur.time + h) < 1e-14 * max(target, 1.0) else cur.time + h
                cur = half.with_values(half.values, t_new)
                drift = abs(cur.values[0] - mass0) / abs(mass0)
                if drift > mass_limit:
                    raise ConservationError(
                        f"relative mass drift {drift:.3e} at t={cur.time:.6g} exceeds {mass_limit:g}; "
                        "the angular quadrature or grid is under-resolved")
                # only let the step grow when it was not clipped by an output time
                if h >= min(dt, cfg.dt_max) or factor < 1.0:
                    dt = min(cfg.dt_max, h * factor)
            else:
                dt = h * factor
                if dt < 1e-12 * max(cfg.t_end, 1.0):
                    raise StiffnessError(f"step size collapsed to {dt:.3g} at t={cur.time:.6g}")
        snaps.append(cur)
        records.append(make_record(cur, initial, probes))
    return Trajectory(snaps, records)

"""Time integration: the fixed-point (Picard) iteration of the integral-form
contraction map on an adaptively shrunk window, a classical fourth-order
one-step integrator for production runs, and the windowed global integrator
that emits trajectories and energy ledgers.

The ledger's cumulative dissipation is accumulated through the same
Runge-Kutta stages as the state (an augmented quadrature variable), so the
energy balance residual measures pure time-discretization error and shrinks
at fourth order under dt refinement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import cumulative_simpson

from .field import Field1D, IntervalGrid, TorusGrid, h1_norm_interval, sobolev_norm
from .operators import Problem
from .diagnostics import (
    EnergyLedger,
    EnergyRecord,
    Trajectory,
    _dissipation_values,
    _energy_values,
    _h1_rows_interval,
    _h_norm_rows,
    _mean_values,
)

__all__ = [
    "IntegratorFailure",
    "PicardSettings",
    "PicardResult",
    "StepperState",
    "suggest_window",
    "gamma_map",
    "picard_solve",
    "rk4_step",
    "integrate",
]


class IntegratorFailure(RuntimeError):
    """Raised when a stage or window produces non-finite values or the
    fixed-point window shrinks below its floor; carries the failure time."""

    def __init__(self, message: str, time: float) -> None:
        super().__init__(f"{message} (t={time:g})")
        self.time = time


@dataclass(frozen=True)
class PicardSettings:
    """Controls for the fixed-point iteration.

    window: fixed window length, or None to start from suggest_window.
    dt_hint: target spacing of the window's time samples; the path carries
    K = max(16, ceil(window/dt_hint)) intervals so Simpson quadrature error
    sits below fixed_point_tolerance.  If the increment ratio exceeds
    contraction_target three iterations running, the window is multiplied by
    window_shrink_factor and the iteration restarts; below min_window the
    solve fails.
    """

    window: float | None = None
    max_iterations: int = 50
    fixed_point_tolerance: float = 1e-12
    contraction_target: float = 0.5
    window_shrink_factor: float = 0.5
    dt_hint: float = 1e-2
    min_window: float = 1e-8
    norm_index: float = 1.0

    def __post_init__(self) -> None:
        if self.window is not None and not self.window > 0.0:
            raise ValueError("window must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if not self.fixed_point_tolerance > 0.0:
            raise ValueError("fixed_point_tolerance must be positive")
        if not 0.0 < self.contraction_target < 1.0:
            raise ValueError("contraction_target must lie in (0, 1)")
        if not 0.0 < self.window_shrink_factor < 1.0:
            raise ValueError("window_shrink_factor must lie in (0, 1)")
        if not self.dt_hint > 0.0:
            raise ValueError("dt_hint must be positive")


def _path_norm_rows(values: np.ndarray, grid, s: float) -> np.ndarray:
    if isinstance(grid, TorusGrid):
        return _h_norm_rows(values, grid.n_points, s)
    return _h1_rows_interval(values, grid)


def suggest_window(u0: Field1D, s: float = 1.0) -> float:
    """Initial fixed-point window 1/(1 + 2R) with R = 2*||u0||_s, the ball
    radius the contraction argument works in.  The adaptive loop shrinks it
    further if contraction is not observed."""
    norm = sobolev_norm(u0, s) if u0.is_torus else h1_norm_interval(u0)
    return 1.0 / (1.0 + 4.0 * norm)


def _as_path_array(path) -> tuple[np.ndarray, bool]:
    if isinstance(path, np.ndarray):
        return path, True
    return np.stack([p.values for p in path]), False


def gamma_map(path, u0: Field1D, problem: Problem, window: float):
    """One application of the integral-form map: returns the path
    t -> u0 + integral_0^t F(u(tau)) dtau on the same uniform time samples,
    the integral evaluated by composite Simpson quadrature.

    `path` is either an array of shape (K+1, n_nodes) or a sequence of
    Field1D on the problem grid; the result has the same type.
    """
    values, was_array = _as_path_array(path)
    if values.ndim != 2 or values.shape[0] < 2:
        raise ValueError("path must carry at least two time samples")
    scale = max(1.0, float(np.max(np.abs(u0.values))))
    if np.max(np.abs(values[0] - u0.values)) > 1e-12 * scale:
        raise ValueError("path must start at u0")
    if not window > 0.0:
        raise ValueError("window must be positive")
    rhs = problem.rhs_values(values)
    if not np.all(np.isfinite(rhs)):
        bad = int(np.argmax(~np.all(np.isfinite(rhs), axis=-1)))
        dx = window / (values.shape[0] - 1)
        raise IntegratorFailure("non-finite right-hand side in window", time=bad * dx)
    dx = window / (values.shape[0] - 1)
    out = u0.values + cumulative_simpson(rhs, dx=dx, axis=0, initial=0.0)
    if was_array:
        return out
    return [Field1D(problem.grid, row) for row in out]


@dataclass(frozen=True)
class PicardResult:
    """Converged fixed-point path on uniform samples of [0, window]."""

    times: np.ndarray
    values: np.ndarray
    grid: TorusGrid | IntervalGrid
    window: float
    iterations: int
    increments: tuple[float, ...]

    @property
    def fields(self) -> list[Field1D]:
        return [Field1D(self.grid, row) for row in self.values]

    @property
    def final(self) -> Field1D:
        return Field1D(self.grid, self.values[-1])


def picard_solve(
    u0: Field1D,
    problem: Problem,
    T_window: float | None = None,
    settings: PicardSettings | None = None,
) -> PicardResult:
    """Iterate the integral-form map from the constant path until the
    sup-over-window H^s increment drops below fixed_point_tolerance.

    The window shrinks by window_shrink_factor whenever the increment ratio
    exceeds contraction_target three iterations in a row (or the iteration
    budget runs out); it fails below min_window.
    """
    if settings is None:
        settings = PicardSettings()
    if u0.grid != problem.grid:
        raise ValueError("initial field and problem grids differ")
    window = T_window if T_window is not None else settings.window
    if window is None:
        window = suggest_window(u0, settings.norm_index)
    if not window > 0.0:
        raise ValueError("window must be positive")

    while True:
        k_intervals = max(16, math.ceil(window / settings.dt_hint))
        path = np.tile(u0.values, (k_intervals + 1, 1))
        dx = window / k_intervals
        increments: list[float] = []
        prev = None
        consecutive_bad = 0
        converged = False
        iterations = 0
        for iterations in range(1, settings.max_iterations + 1):
            rhs = problem.rhs_values(path)
            if not np.all(np.isfinite(rhs)):
                consecutive_bad = 3
                break
            new_path = u0.values + cumulative_simpson(rhs, dx=dx, axis=0, initial=0.0)
            inc = float(np.max(_path_norm_rows(new_path - path, problem.grid, settings.norm_index)))
            increments.append(inc)
            path = new_path
            if inc < settings.fixed_point_tolerance:
                converged = True
                break
            if prev is not None and prev > 0.0 and inc / prev > settings.contraction_target:
                consecutive_bad += 1
                if consecutive_bad >= 3:
                    break
            else:
                consecutive_bad = 0
            prev = inc
        if converged:
            times = dx * np.arange(k_intervals + 1)
            return PicardResult(times, path, problem.grid, window, iterations, tuple(increments))
        window *= settings.window_shrink_factor
        if window < settings.min_window:
            raise IntegratorFailure("fixed-point window shrank below its floor", time=0.0)


@dataclass(frozen=True)
class StepperState:
    """One-step integrator state.  dt may be negative for reversal checks;
    production runs always step forward."""

    t: float
    u: Field1D
    dt: float
    variant: str
    accepted_step_count: int = 0
    rejected_window_count: int = 0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.t) and math.isfinite(self.dt)) or self.dt == 0.0:
            raise ValueError("t must be finite and dt finite and nonzero")


def _rk4_stage_values(u: np.ndarray, dt: float, problem: Problem) -> tuple[np.ndarray, tuple]:
    k1 = problem.rhs_values(u)
    k2 = problem.rhs_values(u + 0.5 * dt * k1)
    k3 = problem.rhs_values(u + 0.5 * dt * k2)
    k4 = problem.rhs_values(u + dt * k3)
    return u + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), (k1, k2, k3, k4)


def rk4_step(state: StepperState, problem: Problem) -> StepperState:
    """Classical four-stage step of u_t = F(u); advances t by dt."""
    if state.variant != problem.variant:
        raise ValueError(f"state variant {state.variant!r} != problem variant {problem.variant!r}")
    new_values, _ = _rk4_stage_values(state.u.values, state.dt, problem)
    if not np.all(np.isfinite(new_values)):
        raise IntegratorFailure("non-finite stage value", time=state.t)
    return replace(
        state,
        t=state.t + state.dt,
        u=Field1D(state.u.grid, new_values),
        accepted_step_count=state.accepted_step_count + 1,
    )


def _dissipation_stage_increment(u: np.ndarray, stages: tuple, dt: float, problem: Problem) -> float:
    """Quadrature of D(u) over one step using the same stage abscissae as the
    state update, keeping cumulative dissipation fourth-order consistent."""
    k1, k2, k3, _ = stages
    d1 = _dissipation_values(u, problem)
    d2 = _dissipation_values(u + 0.5 * dt * k1, problem)
    d3 = _dissipation_values(u + 0.5 * dt * k2, problem)
    d4 = _dissipation_values(u + dt * k3, problem)
    return dt / 6.0 * (d1 + 2.0 * d2 + 2.0 * d3 + d4)


def integrate(
    u0: Field1D,
    horizon: float,
    problem: Problem,
    *,
    dt: float,
    integrator: str = "onestep",
    record_stride: int = 1,
    snapshot_stride: int = 0,
    picard: PicardSettings | None = None,
) -> tuple[Trajectory, EnergyLedger]:
    """Advance u0 over [0, horizon], recording an EnergyRecord every
    record_stride steps (one-step mode) or window samples (picard mode) and a
    trajectory snapshot every snapshot_stride; the initial and final states
    are always recorded.  horizon 0 returns the initial snapshot only.

    Raises IntegratorFailure (with the failure time) on blow-up.
    """
    if u0.grid != problem.grid:
        raise ValueError("initial field and problem grids differ")
    if horizon < 0.0:
        raise ValueError("horizon must be nonnegative")
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    if record_stride < 1 or snapshot_stride < 0:
        raise ValueError("record_stride must be >= 1 and snapshot_stride >= 0")
    if integrator not in ("onestep", "picard"):
        raise ValueError(f"unknown integrator {integrator!r}")

    grid = problem.grid
    trajectory = Trajectory(grid)
    ledger = EnergyLedger()
    e0 = _energy_values(u0.values, grid)

    def record(t: float, values: np.ndarray, cum: float) -> None:
        e = _energy_values(values, grid)
        ledger.append(
            EnergyRecord(
                t=t,
                E=e,
                mean_u=_mean_values(values, grid),
                dissipation_rate=_dissipation_values(values, problem),
                cumulative_dissipation=cum,
                balance_residual=e - e0 + cum,
            )
        )

    trajectory.append(0.0, u0)
    record(0.0, u0.values, 0.0)
    if horizon == 0.0:
        return trajectory, ledger

    if integrator == "onestep":
        n_full = int(math.floor(horizon / dt + 1e-9))
        remainder = horizon - n_full * dt
        if remainder < 1e-9 * max(dt, horizon):
            remainder = 0.0
        n_steps = n_full + (1 if remainder > 0.0 else 0)
        u = np.array(u0.values, copy=True)
        cum = 0.0
        for step in range(1, n_steps + 1):
            step_dt = dt if step <= n_full else remainder
            t_new = step * dt if step <= n_full else horizon
            new_u, stages = _rk4_stage_values(u, step_dt, problem)
            if not np.all(np.isfinite(new_u)):
                raise IntegratorFailure("non-finite stage value", time=min(t_new, horizon))
            cum += _dissipation_stage_increment(u, stages, step_dt, problem)
            u = new_u
            if step % record_stride == 0 or step == n_steps:
                record(t_new, u, cum)
            if (snapshot_stride > 0 and step % snapshot_stride == 0) or step == n_steps:
                trajectory.append(t_new, Field1D(grid, u))
        return trajectory, ledger

    settings = picard if picard is not None else PicardSettings()
    settings = replace(settings, dt_hint=min(settings.dt_hint, dt))
    t = 0.0
    u_field = u0
    cum = 0.0
    sample_index = 0
    while t < horizon * (1.0 - 1e-12):
        window = min(suggest_window(u_field, settings.norm_index), horizon - t)
        try:
            result = picard_solve(u_field, problem, T_window=window, settings=settings)
        except IntegratorFailure as failure:
            raise IntegratorFailure(str(failure), time=t + failure.time) from None
        d_rows = _dissipation_values(result.values, problem)
        cum_rows = cum + cumulative_simpson(d_rows, dx=result.times[1], axis=0, initial=0.0)
        k_total = result.values.shape[0] - 1
        for k in range(1, k_total + 1):
            sample_index += 1
            t_k = t + result.times[k]
            last = t_k >= horizon * (1.0 - 1e-12)
            if sample_index % record_stride == 0 or last:
                record(t_k, result.values[k], float(cum_rows[k]))
            if (snapshot_stride > 0 and sample_index % snapshot_stride == 0) or last:
                trajectory.append(t_k, Field1D(grid, result.values[k]))
        cum = float(cum_rows[-1])
        t += result.window
        u_field = result.final
    return trajectory, ledger

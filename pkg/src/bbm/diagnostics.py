"""Quantitative verification: energy ledgers, dissipation balance residuals,
tail-window dissipation integrals, band observables, decay reports, and the
two-trajectory Lipschitz check.

Energy convention: the ledger's E column is the plain H1 energy

    E = (1/2) integral (u^2 + u_x^2) dx

on both domains, and dissipation rates are plain integrals as well, so the
balance E(t) - E(0) + integral_0^t D dt = 0 closes without any normalization
constants.  On the torus E = pi * sobolev_norm(u, 1)^2; monotonicity and all
relative thresholds are unaffected by the convention.

On the interval the ledger energy uses the summation-by-parts form
(trapezoid-weighted u^2 plus cell-difference u_x^2), which is the quantity
the boundary-feedback semi-discretization dissipates exactly; the public
h1_norm_interval (fourth-order derivative plus trapezoid) agrees with it to
O(h^2) and is what decay reports tabulate.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field as dc_field

import numpy as np

from .field import (
    Field1D,
    IntervalGrid,
    TorusGrid,
    _atomic_write_text,
    _fd4_derivative_values,
    _spectral_derivative_values,
    h1_norm_interval,
    sobolev_norm,
)
from .operators import Problem

__all__ = [
    "EnergyRecord",
    "EnergyLedger",
    "Trajectory",
    "TailDissipation",
    "DecayReport",
    "LipschitzCheck",
    "energy",
    "dissipation_rate",
    "energy_balance_residual",
    "tail_dissipation",
    "band_observable",
    "decay_report",
    "lipschitz_flow_check",
]


# ---------------------------------------------------------------------------
# Array-level kernels (broadcast over leading axes)


def _energy_values(u: np.ndarray, grid) -> np.ndarray | float:
    if isinstance(grid, TorusGrid):
        ux = _spectral_derivative_values(u, grid.n_points)
        e = 0.5 * grid.spacing * (np.sum(u * u, axis=-1) + np.sum(ux * ux, axis=-1))
    else:
        w = grid.trapezoid_weights
        du = np.diff(u, axis=-1) / grid.spacing
        e = 0.5 * (np.sum(w * u * u, axis=-1) + grid.spacing * np.sum(du * du, axis=-1))
    return float(e) if np.ndim(e) == 0 else e


def _mean_values(u: np.ndarray, grid) -> np.ndarray | float:
    if isinstance(grid, TorusGrid):
        m = np.mean(u, axis=-1)
    else:
        w = grid.trapezoid_weights
        m = np.sum(w * u, axis=-1) / grid.length
    return float(m) if np.ndim(m) == 0 else m


def _dissipation_values(u: np.ndarray, problem: Problem) -> np.ndarray | float:
    grid = problem.grid
    if problem.variant == "A":
        d = grid.spacing * np.sum(problem.damping.values * u * u, axis=-1)
    elif problem.variant == "B":
        ux = _spectral_derivative_values(u, grid.n_points)
        d = grid.spacing * np.sum(problem.damping.values * ux * ux, axis=-1)
    else:
        fb = problem.feedback
        d = (fb.alpha - 0.5) * u[..., 0] ** 2 + (0.5 - fb.beta) * u[..., -1] ** 2
    return float(d) if np.ndim(d) == 0 else d


def _h_norm_rows(u: np.ndarray, n_points: int, s: float) -> np.ndarray:
    """sobolev_norm per row of a (..., N) array, matching the symmetric
    coefficient convention (the Nyquist bin is split, hence the 1/2)."""
    c = np.fft.rfft(u, axis=-1) / n_points
    weights = (1.0 + np.arange(n_points // 2 + 1, dtype=float) ** 2) ** s
    w2 = np.abs(c) ** 2 * weights
    return np.sqrt(w2[..., 0] + 2.0 * np.sum(w2[..., 1:-1], axis=-1) + 0.5 * w2[..., -1])


def _h1_rows_interval(u: np.ndarray, grid: IntervalGrid) -> np.ndarray:
    ux = _fd4_derivative_values(u, grid.spacing)
    w = grid.trapezoid_weights
    return np.sqrt(np.sum(w * (u * u + ux * ux), axis=-1))


def _distance_rows(u: np.ndarray, problem: Problem, s: float = 1.0) -> np.ndarray:
    if isinstance(problem.grid, TorusGrid):
        return _h_norm_rows(u, problem.grid.n_points, s)
    return _h1_rows_interval(u, problem.grid)


# ---------------------------------------------------------------------------
# Public functionals


def energy(u: Field1D, problem: Problem | None = None) -> float:
    """H1 energy (1/2) integral (u^2 + u_x^2) dx; see the module docstring
    for the discrete forms used on each domain."""
    return _energy_values(u.values, u.grid)


def dissipation_rate(u: Field1D, problem: Problem) -> float:
    """Instantaneous dissipation: integral a u^2 (variant A), integral a u_x^2
    (variant B), or (alpha - 1/2) u(0)^2 + (1/2 - beta) u(L)^2 (variant C),
    reported positive for dissipative parameters."""
    if u.grid != problem.grid:
        raise ValueError("field and problem grids differ")
    return _dissipation_values(u.values, problem)


def band_observable(u: Field1D, band: tuple[float, float], variant: str) -> float:
    """Localized vanishing proxy: integral of u^2 over the band (variant A),
    integral of u_x^2 over the band (variant B), or the boundary traces
    u(0)^2 + u(L)^2 (variant C, where the band plays no role)."""
    if variant == "C":
        return float(u.values[0] ** 2 + u.values[-1] ** 2)
    left, right = band
    x = u.grid.nodes
    if u.is_torus:
        center = 0.5 * (left + right)
        half_width = 0.5 * (right - left)
        d = (x - center + math.pi) % (2.0 * math.pi) - math.pi
        mask = np.abs(d) <= half_width + 1e-12
    else:
        mask = (x >= left - 1e-12) & (x <= right + 1e-12)
    if not mask.any():
        return 0.0
    if variant == "A":
        integrand = u.values**2
    elif variant == "B":
        integrand = (
            _spectral_derivative_values(u.values, u.grid.n_points) ** 2
            if u.is_torus
            else _fd4_derivative_values(u.values, u.grid.spacing) ** 2
        )
    else:
        raise ValueError(f"unknown variant {variant!r}")
    if u.is_torus:
        return float(u.grid.spacing * np.sum(integrand[mask]))
    w = np.where(mask, u.grid.trapezoid_weights, 0.0)
    idx = np.flatnonzero(mask)
    # interior trapezoid: half-weight the first/last node inside the band
    if idx.size >= 2:
        w[idx[0]] = min(w[idx[0]], 0.5 * u.grid.spacing)
        w[idx[-1]] = min(w[idx[-1]], 0.5 * u.grid.spacing)
    return float(np.sum(w * integrand))


# ---------------------------------------------------------------------------
# Ledger


@dataclass(frozen=True)
class EnergyRecord:
    """One ledger row.  balance_residual = E(t) - E(0) + cumulative_dissipation,
    which vanishes up to time-discretization error."""

    t: float
    E: float
    mean_u: float
    dissipation_rate: float
    cumulative_dissipation: float
    balance_residual: float


_LEDGER_HEADER = "t,E,mean,D,cumD,residual"


class EnergyLedger:
    """Append-only sequence of EnergyRecords with CSV serialization
    (header `t,E,mean,D,cumD,residual`, 17 significant digits)."""

    def __init__(self, records: list[EnergyRecord] | None = None) -> None:
        self.records: list[EnergyRecord] = list(records) if records else []

    def append(self, record: EnergyRecord) -> None:
        if self.records and record.t < self.records[-1].t:
            raise ValueError("ledger times must be nondecreasing")
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    @property
    def times(self) -> np.ndarray:
        return self.column("t")

    def to_csv(self, path: str | os.PathLike) -> None:
        lines = [_LEDGER_HEADER]
        lines.extend(
            f"{r.t:.17g},{r.E:.17g},{r.mean_u:.17g},{r.dissipation_rate:.17g},"
            f"{r.cumulative_dissipation:.17g},{r.balance_residual:.17g}"
            for r in self.records
        )
        _atomic_write_text(path, "\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path: str | os.PathLike) -> "EnergyLedger":
        with open(path) as handle:
            header = handle.readline().strip()
            if header != _LEDGER_HEADER:
                raise ValueError(f"{path}: expected header {_LEDGER_HEADER!r}, got {header!r}")
            body = handle.read()
        if not body.strip():
            return cls()
        data = np.loadtxt(body.splitlines(), delimiter=",", ndmin=2)
        if data.shape[1] != 6:
            raise ValueError(f"{path}: expected 6 columns, got {data.shape[1]}")
        return cls([EnergyRecord(*row) for row in data])


def energy_balance_residual(ledger: EnergyLedger) -> float:
    """max over records of |E(t) - E(0) + cumulative dissipation| (recomputed
    from the columns so loaded ledgers are re-audited, not trusted)."""
    if len(ledger) == 0:
        return 0.0
    e = ledger.column("E")
    cum = ledger.column("cumulative_dissipation")
    return float(np.max(np.abs(e - e[0] + cum - cum[0])))


# ---------------------------------------------------------------------------
# Trajectory


class Trajectory:
    """Time-stamped field snapshots accumulated during integration."""

    def __init__(self, grid) -> None:
        self.grid = grid
        self.times: list[float] = []
        self.fields: list[Field1D] = []

    def append(self, t: float, u: Field1D) -> None:
        if u.grid != self.grid:
            raise ValueError("snapshot grid does not match the trajectory grid")
        if self.times and t < self.times[-1]:
            raise ValueError("snapshot times must be nondecreasing")
        self.times.append(float(t))
        self.fields.append(u)

    def __len__(self) -> int:
        return len(self.times)

    def __iter__(self):
        return iter(zip(self.times, self.fields))

    @property
    def span(self) -> float:
        return self.times[-1] - self.times[0] if self.times else 0.0

    def values_matrix(self) -> np.ndarray:
        return np.stack([f.values for f in self.fields])

    def save(self, directory: str | os.PathLike) -> list[str]:
        from .field import write_snapshot

        os.makedirs(directory, exist_ok=True)
        paths = []
        for k, (t, f) in enumerate(self):
            path = os.path.join(os.fspath(directory), f"snap_{k:06d}.csv")
            write_snapshot(f, t, path)
            paths.append(path)
        return paths


# ---------------------------------------------------------------------------
# Tail dissipation


@dataclass(frozen=True)
class TailDissipation:
    """Window integrals I_n = integral over [n T, (n+1) T] of D(t) dt.

    eventually_decreasing means I_{n+1} <= (1 + slack) I_n for every n from
    decreasing_from to the end; small slack absorbs the beating that a
    near-discrete set of surviving modes imprints on the window sums.
    """

    window: float
    integrals: np.ndarray
    eventually_decreasing: bool
    decreasing_from: int | None
    slack: float

    @property
    def first(self) -> float:
        return float(self.integrals[0])

    @property
    def last(self) -> float:
        return float(self.integrals[-1])


def tail_dissipation(ledger: EnergyLedger, window: float, slack: float = 0.05) -> TailDissipation:
    """Difference the ledger's cumulative dissipation at window boundaries
    (linear interpolation between records)."""
    if window <= 0.0:
        raise ValueError(f"window must be positive, got {window}")
    t = ledger.times
    horizon = t[-1] - t[0]
    if horizon < 3.0 * window * (1.0 - 1e-12):
        raise ValueError(f"horizon {horizon} must cover at least 3 windows of {window}")
    n_windows = int(math.floor(horizon / window + 1e-9))
    edges = t[0] + window * np.arange(n_windows + 1)
    cum = np.interp(edges, t, ledger.column("cumulative_dissipation"))
    integrals = np.diff(cum)
    decreasing_from = None
    for start in range(n_windows - 1, -1, -1):
        seg = integrals[start:]
        if np.all(seg[1:] <= seg[:-1] * (1.0 + slack) + 1e-300):
            decreasing_from = start
        else:
            break
    eventually = decreasing_from is not None and decreasing_from <= max(1, (3 * n_windows) // 4)
    return TailDissipation(window, integrals, eventually, decreasing_from, slack)


# ---------------------------------------------------------------------------
# Decay report


@dataclass(frozen=True)
class DecayReport:
    """Decay metrics sampled one per window: norm distances to the expected
    limit (0, or the conserved mean for variant B), the band observable, a
    ledger-based monotonicity verdict, and the tail-dissipation section."""

    variant: str
    window: float
    times: np.ndarray
    target_kind: str
    target_value: float
    norms: dict[str, np.ndarray]
    h1_distance: np.ndarray
    band: tuple[float, float] | None
    band_values: np.ndarray
    monotone: bool
    monotone_slack: float
    limit_estimate: float
    tail: TailDissipation | None

    def to_json_dict(self) -> dict:
        return {
            "variant": self.variant,
            "window": self.window,
            "times": [float(v) for v in self.times],
            "target": {"kind": self.target_kind, "value": self.target_value},
            "norms": {k: [float(x) for x in v] for k, v in self.norms.items()},
            "h1_distance": [float(v) for v in self.h1_distance],
            "band": list(self.band) if self.band is not None else None,
            "band_values": [float(v) for v in self.band_values],
            "monotone": self.monotone,
            "monotone_slack": self.monotone_slack,
            "limit_estimate": self.limit_estimate,
            "tail": None
            if self.tail is None
            else {
                "window": self.tail.window,
                "integrals": [float(v) for v in self.tail.integrals],
                "eventually_decreasing": self.tail.eventually_decreasing,
                "decreasing_from": self.tail.decreasing_from,
                "slack": self.tail.slack,
                "first": self.tail.first,
                "last": self.tail.last,
            },
        }

    def write_json(self, path: str | os.PathLike) -> None:
        _atomic_write_text(path, json.dumps(self.to_json_dict(), indent=2) + "\n")

    @classmethod
    def from_json_dict(cls, d: dict) -> "DecayReport":
        tail = None
        if d.get("tail") is not None:
            dt = d["tail"]
            tail = TailDissipation(
                dt["window"],
                np.array(dt["integrals"]),
                dt["eventually_decreasing"],
                dt["decreasing_from"],
                dt["slack"],
            )
        return cls(
            variant=d["variant"],
            window=d["window"],
            times=np.array(d["times"]),
            target_kind=d["target"]["kind"],
            target_value=d["target"]["value"],
            norms={k: np.array(v) for k, v in d["norms"].items()},
            h1_distance=np.array(d["h1_distance"]),
            band=tuple(d["band"]) if d.get("band") is not None else None,
            band_values=np.array(d["band_values"]),
            monotone=d["monotone"],
            monotone_slack=d["monotone_slack"],
            limit_estimate=d["limit_estimate"],
            tail=tail,
        )


def decay_report(
    trajectory: Trajectory,
    problem: Problem,
    ledger: EnergyLedger,
    *,
    window: float,
    s_values: tuple[float, ...] = (0.0, 0.5, 0.9),
    tail_slack: float = 0.05,
) -> DecayReport:
    """Sample the trajectory once per window (snapshots must land within a
    quarter window of the multiples) and tabulate decay metrics.

    The monotonicity verdict checks the ledger energy: E may increase between
    consecutive records by at most 10x the measured balance residual, i.e.
    only by time-discretization error.
    """
    if len(trajectory) < 2:
        raise ValueError("trajectory must contain at least two snapshots")
    if trajectory.span < 10.0 * window * (1.0 - 1e-12):
        raise ValueError(
            f"trajectory spans {trajectory.span}, needs >= 10 windows of {window}"
        )
    times = np.array(trajectory.times)
    n_samples = int(math.floor(trajectory.span / window + 1e-9))
    sample_targets = times[0] + window * np.arange(n_samples + 1)
    indices = []
    for target in sample_targets:
        k = int(np.argmin(np.abs(times - target)))
        if abs(times[k] - target) > 0.25 * window:
            raise ValueError(
                f"no snapshot within a quarter window of t={target}; "
                "align snapshot_stride with the decay window"
            )
        indices.append(k)
    if len(set(indices)) != len(indices):
        raise ValueError("snapshot cadence too coarse: decay samples collide")

    grid = problem.grid
    sampled = np.stack([trajectory.fields[k].values for k in indices])
    sample_times = times[indices]

    if problem.variant == "B":
        target_kind = "mean"
        target_value = _mean_values(trajectory.fields[0].values, grid)
    else:
        target_kind = "zero"
        target_value = 0.0
    deviation = sampled - target_value

    norms: dict[str, np.ndarray] = {}
    if isinstance(grid, TorusGrid):
        for s in s_values:
            norms[f"s={s:g}"] = _h_norm_rows(deviation, grid.n_points, s)
        h1_distance = _h_norm_rows(deviation, grid.n_points, 1.0)
    else:
        w = grid.trapezoid_weights
        norms["L2"] = np.sqrt(np.sum(w * deviation * deviation, axis=-1))
        norms["H1"] = _h1_rows_interval(deviation, grid)
        h1_distance = norms["H1"]

    band = problem.damping.support_band if problem.damping is not None else None
    if problem.variant == "C":
        band_values = np.array(
            [band_observable(trajectory.fields[k], (0.0, 0.0), "C") for k in indices]
        )
    elif band is not None:
        band_values = np.array(
            [band_observable(trajectory.fields[k], band, problem.variant) for k in indices]
        )
    else:
        band_values = np.zeros(len(indices))

    residual = energy_balance_residual(ledger)
    slack = 10.0 * residual
    e = ledger.column("E")
    monotone = bool(np.all(np.diff(e) <= slack))

    tail = None
    if ledger.times[-1] - ledger.times[0] >= 3.0 * window * (1.0 - 1e-12):
        tail = tail_dissipation(ledger, window, slack=tail_slack)

    return DecayReport(
        variant=problem.variant,
        window=window,
        times=sample_times,
        target_kind=target_kind,
        target_value=float(target_value),
        norms=norms,
        h1_distance=h1_distance,
        band=band,
        band_values=band_values,
        monotone=monotone,
        monotone_slack=slack,
        limit_estimate=float(h1_distance[-1]),
        tail=tail,
    )


# ---------------------------------------------------------------------------
# Lipschitz flow check


@dataclass(frozen=True)
class LipschitzCheck:
    """Per-pair amplification sup_t ||u(t) - v(t)||_1 / ||u0 - v0||_1 over a
    shared fixed-point window, against the factor-2 flow bound."""

    factors: np.ndarray
    windows: np.ndarray
    bound: float = 2.0

    @property
    def worst(self) -> float:
        return float(np.max(self.factors))

    @property
    def passed(self) -> bool:
        return bool(np.all(self.factors <= self.bound))


def lipschitz_flow_check(
    problem: Problem,
    *,
    n_pairs: int = 20,
    rho: float = 1.0,
    delta: float = 1e-3,
    seed: int = 20240,
    settings=None,
) -> LipschitzCheck:
    """Evolve n_pairs of nearby initial states (norms <= rho, separation
    delta in H1) with the fixed-point integrator on a shared window and
    measure the worst amplification of the separation."""
    from .timestep import PicardSettings, picard_solve, suggest_window

    if not isinstance(problem.grid, TorusGrid):
        raise ValueError("the Lipschitz check runs on torus problems")
    if settings is None:
        settings = PicardSettings()
    grid = problem.grid
    x = grid.nodes
    rng = np.random.default_rng(seed)
    factors = np.empty(n_pairs)
    windows = np.empty(n_pairs)
    for pair in range(n_pairs):
        u0 = np.zeros_like(x)
        for n in range(1, 7):
            amp = rng.standard_normal() / n
            u0 += amp * np.cos(n * x) + (rng.standard_normal() / n) * np.sin(n * x)
        u0 *= 0.8 * rho / _h_norm_rows(u0, grid.n_points, 1.0)
        w = np.zeros_like(x)
        for n in range(1, 5):
            w += rng.standard_normal() * np.cos(n * x)
        w *= delta / _h_norm_rows(w, grid.n_points, 1.0)
        v0 = u0 + w
        fu = Field1D(grid, u0)
        fv = Field1D(grid, v0)
        window = min(suggest_window(fu), suggest_window(fv))
        ru = picard_solve(fu, problem, T_window=window, settings=settings)
        rv = picard_solve(fv, problem, T_window=min(window, ru.window), settings=settings)
        if rv.window < ru.window:
            ru = picard_solve(fu, problem, T_window=rv.window, settings=settings)
        separation0 = _h_norm_rows(u0 - v0, grid.n_points, 1.0)
        sup = float(np.max(_h_norm_rows(ru.values - rv.values, grid.n_points, 1.0)))
        factors[pair] = sup / separation0
        windows[pair] = ru.window
    return LipschitzCheck(factors, windows)

"""Energy ledgers, dissipation functionals, tail-window integrals, decay
reports, and the flow Lipschitz check."""

import json
import math
import os

import numpy as np
import pytest

from bbm.diagnostics import (
    DecayReport,
    EnergyLedger,
    EnergyRecord,
    LipschitzCheck,
    TailDissipation,
    Trajectory,
    band_observable,
    decay_report,
    dissipation_rate,
    energy,
    energy_balance_residual,
    lipschitz_flow_check,
    tail_dissipation,
)
from bbm.field import Field1D, IntervalGrid, TorusGrid, read_snapshot
from bbm.operators import DampingProfile, FeedbackCoefficients, Problem
from bbm.timestep import integrate

TWO_PI = 2.0 * math.pi


def bump_problem(n: int = 64, variant: str = "A") -> Problem:
    grid = TorusGrid(n)
    damping = DampingProfile.bump(grid, center=math.pi, radius=1.0, amplitude=1.0)
    return Problem(variant=variant, grid=grid, damping=damping)


def boundary_problem(m: int = 128, alpha: float = 0.8, beta: float = 0.1) -> Problem:
    grid = IntervalGrid(TWO_PI, m)
    return Problem(variant="C", grid=grid, feedback=FeedbackCoefficients(alpha=alpha, beta=beta))


def synthetic_ledger(times, cum) -> EnergyLedger:
    ledger = EnergyLedger()
    for t, c in zip(times, cum):
        ledger.append(EnergyRecord(t=t, E=1.0 - c, mean_u=0.0, dissipation_rate=0.0,
                                   cumulative_dissipation=c, balance_residual=0.0))
    return ledger


class TestEnergy:
    def test_zero_field(self):
        grid = TorusGrid(64)
        assert energy(Field1D(grid, np.zeros(64))) == 0.0

    def test_cosine_torus(self):
        # (1/2) integral (cos^2 + sin^2) = (1/2)(2 pi) = pi
        grid = TorusGrid(64)
        u = Field1D(grid, np.cos(grid.nodes))
        assert energy(u) == pytest.approx(math.pi, rel=1e-12)

    def test_constant_torus(self):
        grid = TorusGrid(32)
        u = Field1D(grid, np.full(32, 3.0))
        assert energy(u) == pytest.approx(math.pi * 9.0, rel=1e-12)

    def test_constant_interval(self):
        grid = IntervalGrid(2.0, 64)
        u = Field1D(grid, np.full(grid.n_nodes, 3.0))
        assert energy(u) == pytest.approx(0.5 * 9.0 * 2.0, rel=1e-12)

    # half-period sine on (0, 2); second-order quadrature under cell refinement
    interval_energy_error = {129: 1e-4, 257: 3e-5, 513: 1e-5}

    def test_sine_interval(self):
        exact = 0.5 * (1.0 + (math.pi / 2.0) ** 2)
        for m, tol in self.interval_energy_error.items():
            grid = IntervalGrid(2.0, m)
            u = Field1D(grid, np.sin(math.pi * grid.nodes / 2.0))
            assert energy(u) == pytest.approx(exact, rel=tol), f"M={m}"


class TestDissipationRate:
    def test_zero_field(self):
        problem = bump_problem(64)
        assert dissipation_rate(Field1D(problem.grid, np.zeros(64)), problem) == 0.0

    def test_variant_a_sine_unit_damping(self):
        grid = TorusGrid(64)
        problem = Problem(variant="A", grid=grid, damping=DampingProfile.constant(grid, 1.0))
        u = Field1D(grid, np.sin(grid.nodes))
        assert dissipation_rate(u, problem) == pytest.approx(math.pi, rel=1e-12)

    def test_variant_b_sine_unit_damping(self):
        grid = TorusGrid(64)
        problem = Problem(variant="B", grid=grid, damping=DampingProfile.constant(grid, 1.0))
        u = Field1D(grid, np.sin(grid.nodes))
        assert dissipation_rate(u, problem) == pytest.approx(math.pi, rel=1e-12)

    def test_variant_c_traces(self):
        problem = boundary_problem(alpha=1.0, beta=0.0)
        u = Field1D(problem.grid, np.full(problem.grid.n_nodes, 2.0))
        # (alpha - 1/2) u(0)^2 + (1/2 - beta) u(L)^2 = 0.5*4 + 0.5*4
        assert dissipation_rate(u, problem) == 4.0

    def test_variant_c_conservative_pair_gives_zero(self):
        problem = boundary_problem(alpha=0.5, beta=0.5)
        u = Field1D(problem.grid, np.cos(problem.grid.nodes))
        assert dissipation_rate(u, problem) == 0.0

    def test_disjoint_support_gives_zero(self):
        problem = bump_problem(128)
        x = problem.grid.nodes
        d = (x + math.pi) % TWO_PI - math.pi  # signed distance to 0
        u = Field1D(problem.grid, np.where(np.abs(d) < 0.5, 1.0, 0.0))
        assert dissipation_rate(u, problem) == 0.0

    def test_grid_mismatch_rejected(self):
        problem = bump_problem(64)
        u = Field1D(TorusGrid(32), np.zeros(32))
        with pytest.raises(ValueError, match="grids differ"):
            dissipation_rate(u, problem)


class TestBandObservable:
    def test_zero_field(self):
        grid = TorusGrid(64)
        zero = Field1D(grid, np.zeros(64))
        assert band_observable(zero, (0.0, 1.0), "A") == 0.0
        gi = IntervalGrid(1.0, 32)
        assert band_observable(Field1D(gi, np.zeros(33)), (0.0, 1.0), "C") == 0.0

    def test_constant_has_zero_derivative_observable(self):
        grid = TorusGrid(64)
        u = Field1D(grid, np.full(64, 5.0))
        assert band_observable(u, (1.0, 2.0), "B") == pytest.approx(0.0, abs=1e-20)

    def test_sine_half_torus_variant_a(self):
        grid = TorusGrid(64)
        u = Field1D(grid, np.sin(grid.nodes))
        assert band_observable(u, (0.0, math.pi), "A") == pytest.approx(math.pi / 2.0, abs=1e-12)

    def test_cosine_half_torus_variant_b(self):
        grid = TorusGrid(64)
        u = Field1D(grid, np.cos(grid.nodes))
        assert band_observable(u, (0.0, math.pi), "B") == pytest.approx(math.pi / 2.0, abs=1e-12)

    def test_band_wraps_around_seam(self):
        grid = TorusGrid(64)
        one = Field1D(grid, np.ones(64))
        at_seam = band_observable(one, (-0.5, 0.5), "A")
        away = band_observable(one, (math.pi - 0.5, math.pi + 0.5), "A")
        assert at_seam > 0.0
        assert at_seam == pytest.approx(away, rel=1e-12)

    def test_band_with_no_nodes(self):
        grid = TorusGrid(64)
        one = Field1D(grid, np.ones(64))
        assert band_observable(one, (0.01, 0.02), "A") == 0.0

    def test_variant_c_ignores_band(self):
        gi = IntervalGrid(1.0, 32)
        u = Field1D(gi, np.full(33, 2.0))
        assert band_observable(u, (0.0, 0.5), "C") == 8.0
        assert band_observable(u, (0.2, 0.9), "C") == 8.0

    def test_interval_band_quadrature(self):
        # integral of x^2 over the node-aligned band (0.5, 1.5) = 3.25/3
        grid = IntervalGrid(2.0, 256)
        u = Field1D(grid, grid.nodes.copy())
        assert band_observable(u, (0.5, 1.5), "A") == pytest.approx(3.25 / 3.0, rel=1e-4)

    def test_unknown_variant_rejected(self):
        grid = TorusGrid(64)
        with pytest.raises(ValueError, match="variant"):
            band_observable(Field1D(grid, np.zeros(64)), (0.0, 1.0), "D")


class TestEnergyLedger:
    def make_ledger(self) -> EnergyLedger:
        ledger = EnergyLedger()
        for k in range(5):
            ledger.append(
                EnergyRecord(
                    t=0.1 * k,
                    E=1.0 / (1.0 + k),
                    mean_u=1e-3 * k,
                    dissipation_rate=0.5**k,
                    cumulative_dissipation=1.0 - 1.0 / (1.0 + k),
                    balance_residual=1e-15 * k,
                )
            )
        return ledger

    def test_header_line(self, tmp_path):
        path = tmp_path / "ledger.csv"
        self.make_ledger().to_csv(path)
        assert path.read_text().splitlines()[0] == "t,E,mean,D,cumD,residual"

    def test_csv_round_trip_is_exact(self, tmp_path):
        ledger = self.make_ledger()
        path = tmp_path / "ledger.csv"
        ledger.to_csv(path)
        back = EnergyLedger.from_csv(path)
        assert len(back) == len(ledger)
        for a, b in zip(ledger.records, back.records):
            assert a == b  # 17 significant digits round-trip doubles exactly

    def test_empty_ledger_round_trip(self, tmp_path):
        path = tmp_path / "empty.csv"
        EnergyLedger().to_csv(path)
        assert len(EnergyLedger.from_csv(path)) == 0

    def test_append_requires_nondecreasing_times(self):
        ledger = self.make_ledger()
        with pytest.raises(ValueError, match="nondecreasing"):
            ledger.append(EnergyRecord(t=0.0, E=0.0, mean_u=0.0, dissipation_rate=0.0,
                                       cumulative_dissipation=0.0, balance_residual=0.0))

    def test_columns(self):
        ledger = self.make_ledger()
        assert np.array_equal(ledger.times, 0.1 * np.arange(5))
        assert ledger.column("E")[0] == 1.0
        assert ledger.column("dissipation_rate")[2] == 0.25

    def test_rejects_wrong_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time,energy\n0,1\n")
        with pytest.raises(ValueError, match="header"):
            EnergyLedger.from_csv(path)

    def test_rejects_wrong_column_count(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("t,E,mean,D,cumD,residual\n0.0,1.0,0.0\n")
        with pytest.raises(ValueError, match="columns"):
            EnergyLedger.from_csv(path)


class TestEnergyBalanceResidual:
    def test_empty_ledger(self):
        assert energy_balance_residual(EnergyLedger()) == 0.0

    def test_exact_balance(self):
        times = np.linspace(0.0, 2.0, 9)
        cum = 1.0 - np.exp(-times)
        assert energy_balance_residual(synthetic_ledger(times, cum)) == 0.0

    def test_detects_perturbation(self):
        times = np.linspace(0.0, 2.0, 9)
        cum = 1.0 - np.exp(-times)
        ledger = synthetic_ledger(times, cum)
        r = ledger.records[4]
        ledger.records[4] = EnergyRecord(r.t, r.E + 1e-3, r.mean_u, r.dissipation_rate,
                                         r.cumulative_dissipation, r.balance_residual)
        assert energy_balance_residual(ledger) == pytest.approx(1e-3, rel=1e-9)

    def test_recomputed_after_reload(self, tmp_path):
        # the residual column is ignored: a loaded ledger is re-audited
        times = np.linspace(0.0, 1.0, 5)
        ledger = synthetic_ledger(times, 0.5 * times)
        path = tmp_path / "ledger.csv"
        ledger.to_csv(path)
        assert energy_balance_residual(EnergyLedger.from_csv(path)) == 0.0


class TestTrajectory:
    def test_append_validates_grid_and_time(self):
        grid = TorusGrid(32)
        trajectory = Trajectory(grid)
        trajectory.append(0.0, Field1D(grid, np.zeros(32)))
        with pytest.raises(ValueError, match="grid"):
            trajectory.append(0.1, Field1D(TorusGrid(64), np.zeros(64)))
        with pytest.raises(ValueError, match="nondecreasing"):
            trajectory.append(-0.1, Field1D(grid, np.zeros(32)))

    def test_span_and_matrix(self):
        grid = TorusGrid(32)
        trajectory = Trajectory(grid)
        for k in range(4):
            trajectory.append(0.5 * k, Field1D(grid, float(k) + np.zeros(32)))
        assert trajectory.span == 1.5
        assert len(trajectory) == 4
        matrix = trajectory.values_matrix()
        assert matrix.shape == (4, 32)
        assert np.all(matrix[2] == 2.0)

    def test_save_round_trip(self, tmp_path):
        grid = TorusGrid(32)
        trajectory = Trajectory(grid)
        for k in range(3):
            trajectory.append(0.25 * k, Field1D(grid, np.cos(grid.nodes) / (1.0 + k)))
        paths = trajectory.save(tmp_path / "snaps")
        assert [os.path.basename(p) for p in paths] == [
            "snap_000000.csv", "snap_000001.csv", "snap_000002.csv",
        ]
        for k, path in enumerate(paths):
            field, t = read_snapshot(path)
            assert t == 0.25 * k
            assert np.array_equal(field.values, trajectory.fields[k].values)


class TestTailDissipation:
    def test_zero_ledger(self):
        times = np.linspace(0.0, 10.0, 21)
        tail = tail_dissipation(synthetic_ledger(times, np.zeros(21)), window=1.0)
        assert np.all(tail.integrals == 0.0)
        assert tail.eventually_decreasing
        assert tail.decreasing_from == 0
        assert tail.first == 0.0 and tail.last == 0.0

    def test_exponential_decay_integrals(self):
        times = np.linspace(0.0, 10.0, 21)
        cum = 1.0 - np.exp(-times)
        tail = tail_dissipation(synthetic_ledger(times, cum), window=1.0)
        expected = np.exp(-np.arange(10)) * (1.0 - math.exp(-1.0))
        assert tail.integrals == pytest.approx(expected, rel=1e-12)
        assert tail.decreasing_from == 0
        assert tail.eventually_decreasing

    def test_decrease_detected_after_transient(self):
        integrals = np.array([4.0, 2.0, 1.0, 5.0, 2.0, 1.0])
        times = np.arange(7.0)
        tail = tail_dissipation(synthetic_ledger(times, np.concatenate([[0.0], np.cumsum(integrals)])), window=1.0)
        assert tail.integrals == pytest.approx(integrals)
        assert tail.decreasing_from == 3
        assert tail.eventually_decreasing  # 3 <= 3/4 of 6 windows

    def test_late_bump_is_not_eventually_decreasing(self):
        integrals = np.array([1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 10.0, 5.0])
        times = np.arange(10.0)
        tail = tail_dissipation(synthetic_ledger(times, np.concatenate([[0.0], np.cumsum(integrals)])), window=1.0)
        assert tail.decreasing_from == 7
        assert not tail.eventually_decreasing

    def test_rejects_bad_window_and_short_horizon(self):
        times = np.linspace(0.0, 2.0, 5)
        ledger = synthetic_ledger(times, np.zeros(5))
        with pytest.raises(ValueError, match="window"):
            tail_dissipation(ledger, window=0.0)
        with pytest.raises(ValueError, match="3 windows"):
            tail_dissipation(ledger, window=1.0)


@pytest.fixture(scope="module")
def reference_run():
    problem = bump_problem(64)
    u0 = Field1D(problem.grid, 0.5 * np.cos(problem.grid.nodes))
    trajectory, ledger = integrate(u0, 2.0, problem, dt=0.01, record_stride=5, snapshot_stride=10)
    return problem, trajectory, ledger


class TestDecayReport:

    def test_variant_a_report(self, reference_run):
        problem, trajectory, ledger = reference_run
        report = decay_report(trajectory, problem, ledger, window=0.2)
        assert report.variant == "A"
        assert report.target_kind == "zero" and report.target_value == 0.0
        assert report.times == pytest.approx(0.2 * np.arange(11))
        assert set(report.norms) == {"s=0", "s=0.5", "s=0.9"}
        # the H1 distance to the limit is nonincreasing within 1e-9 per window
        assert np.all(np.diff(report.h1_distance) <= 1e-9)
        assert report.monotone
        assert report.monotone_slack == 10.0 * energy_balance_residual(ledger)
        assert report.band == problem.damping.support_band
        assert report.band_values[-1] < report.band_values[0]
        assert report.limit_estimate == report.h1_distance[-1]

    def test_tail_section_attached(self, reference_run):
        problem, trajectory, ledger = reference_run
        report = decay_report(trajectory, problem, ledger, window=0.2)
        assert report.tail is not None
        assert report.tail.window == 0.2
        assert len(report.tail.integrals) == 10
        assert report.tail.decreasing_from == 0

    def test_json_round_trip(self, reference_run, tmp_path):
        problem, trajectory, ledger = reference_run
        report = decay_report(trajectory, problem, ledger, window=0.2)
        back = DecayReport.from_json_dict(report.to_json_dict())
        assert back.variant == report.variant
        assert np.array_equal(back.times, report.times)
        assert np.array_equal(back.h1_distance, report.h1_distance)
        for key in report.norms:
            assert np.array_equal(back.norms[key], report.norms[key])
        assert back.band == report.band
        assert back.tail.decreasing_from == report.tail.decreasing_from
        # and through an actual file
        path = tmp_path / "decay.json"
        report.write_json(path)
        with open(path) as handle:
            from_file = DecayReport.from_json_dict(json.load(handle))
        assert np.array_equal(from_file.h1_distance, report.h1_distance)

    def test_zero_initial_data(self):
        problem = bump_problem(32)
        u0 = Field1D(problem.grid, np.zeros(32))
        trajectory, ledger = integrate(u0, 2.0, problem, dt=0.01, record_stride=5, snapshot_stride=10)
        report = decay_report(trajectory, problem, ledger, window=0.2)
        for key, values in report.norms.items():
            assert np.all(values == 0.0), key
        assert report.monotone
        assert report.limit_estimate == 0.0

    def test_variant_b_targets_conserved_mean(self):
        problem = bump_problem(64, variant="B")
        u0 = Field1D(problem.grid, 1.0 + 0.3 * np.cos(problem.grid.nodes))
        trajectory, ledger = integrate(u0, 2.0, problem, dt=0.01, record_stride=5, snapshot_stride=10)
        report = decay_report(trajectory, problem, ledger, window=0.2)
        assert report.target_kind == "mean"
        assert report.target_value == pytest.approx(1.0, rel=1e-12)
        mean = ledger.column("mean_u")
        assert np.max(np.abs(mean - mean[0])) <= 1e-12 * (1.0 + abs(mean[0]))

    def test_variant_c_uses_traces(self):
        problem = boundary_problem(128)
        x = problem.grid.nodes
        u0 = Field1D(problem.grid, 0.1 * np.cos(math.pi * x / TWO_PI))
        trajectory, ledger = integrate(u0, 1.0, problem, dt=5e-3, record_stride=10, snapshot_stride=20)
        report = decay_report(trajectory, problem, ledger, window=0.1)
        assert report.band is None
        assert set(report.norms) == {"L2", "H1"}
        first = trajectory.fields[0].values
        assert report.band_values[0] == pytest.approx(first[0] ** 2 + first[-1] ** 2, rel=1e-12)
        assert report.monotone

    def test_rejects_short_span_and_sparse_snapshots(self, reference_run):
        problem, trajectory, ledger = reference_run
        with pytest.raises(ValueError, match="10 windows"):
            decay_report(trajectory, problem, ledger, window=0.5)
        with pytest.raises(ValueError, match="quarter window"):
            decay_report(trajectory, problem, ledger, window=0.15)
        sparse = Trajectory(problem.grid)
        sparse.append(0.0, trajectory.fields[0])
        with pytest.raises(ValueError, match="two snapshots"):
            decay_report(sparse, problem, ledger, window=0.2)


class TestLipschitzFlowCheck:
    def test_small_sample(self):
        problem = bump_problem(64)
        check = lipschitz_flow_check(problem, n_pairs=3)
        assert check.factors.shape == (3,)
        assert np.all(check.windows > 0.0)
        assert check.worst == np.max(check.factors)
        assert 0.9 <= check.worst <= 2.0
        assert check.passed

    def test_worst_above_bound_fails(self):
        check = LipschitzCheck(factors=np.array([1.0, 2.5]), windows=np.array([0.1, 0.1]))
        assert not check.passed
        assert check.worst == 2.5

    def test_interval_problem_rejected(self):
        with pytest.raises(ValueError, match="torus"):
            lipschitz_flow_check(boundary_problem(64))

"""Config parsing, single-run artifacts, sweeps, and the regression baseline."""

import json
import math
import os

import numpy as np
import pytest

from bbm.cli import ConfigError, SimConfig, main, run_simulate, run_sweep, run_verify

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
CONFIG_DIR = os.path.join(REPO_ROOT, "configs")
BASELINE_DIR = os.path.join(REPO_ROOT, "tests", "baselines")

TWO_PI = 2.0 * math.pi


def small_config(**overrides) -> dict:
    d = {
        "variant": "A",
        "domain": {"kind": "torus", "n_points": 32},
        "initial_condition": {"kind": "single_mode", "amplitude": 0.2, "wavenumber": 1},
        "damping": {"kind": "bump", "center": math.pi, "radius": 1.0, "amplitude": 1.0},
        "dt": 0.01,
        "horizon": 2.0,
        "record_stride": 10,
        "snapshot_stride": 20,
    }
    d.update(overrides)
    return d


def write_json(path, payload) -> str:
    with open(path, "w") as handle:
        json.dump(payload, handle)
    return str(path)


class TestConfigValidation:
    def test_minimal_config_parses_with_defaults(self):
        cfg = SimConfig.from_dict(small_config())
        assert cfg.integrator == "onestep"
        assert cfg.output_dir == "bbm_out"
        assert cfg.dealias is True
        assert cfg.snapshot_stride == 20
        assert cfg.build_grid().n_points == 32

    def test_default_snapshot_stride_splits_run_in_twenty(self):
        d = small_config(horizon=10.0, dt=0.01)
        d.pop("snapshot_stride")
        cfg = SimConfig.from_dict(d)
        assert cfg.snapshot_stride is None
        assert cfg.resolved_snapshot_stride() == 1000 // 20

    @pytest.mark.parametrize(
        "mutate,field",
        [
            (lambda d: d.update(variant="C"), "domain"),
            (lambda d: d.update(variant="Z"), "variant"),
            (lambda d: d.update(domain={"kind": "interval", "length": 1.0, "n_cells": 64}), "domain"),
            (lambda d: d.update(domain={"kind": "torus", "n_points": 15}), "domain.n_points"),
            (lambda d: d.pop("damping"), "damping"),
            (lambda d: d.update(feedback={"alpha": 0.8, "beta": 0.1}), "feedback"),
            (lambda d: d.update(dt=-0.1), "dt"),
            (lambda d: d.update(dt=True), "dt"),
            (lambda d: d.update(horizon=-1.0), "horizon"),
            (lambda d: d.update(record_stride=0), "record_stride"),
            (lambda d: d.update(snapshot_stride=-1), "snapshot_stride"),
            (lambda d: d.update(decay_window=-2.0), "decay_window"),
            (lambda d: d.update(mystery=1), "mystery"),
            (lambda d: d.update(initial_condition={"kind": "warp", "value": 1.0}), "initial_condition.kind"),
            (lambda d: d.update(initial_condition={"kind": "solitary_wave", "speed": 0.9, "center": 0.0}),
             "initial_condition.speed"),
            (lambda d: d.update(damping={"kind": "bump", "center": 0.0, "radius": -1.0, "amplitude": 1.0}),
             "damping.radius"),
            (lambda d: d.update(damping={"kind": "constant", "amplitude": -0.5}), "damping.amplitude"),
        ],
    )
    def test_rejections_name_the_offending_field(self, mutate, field):
        d = small_config()
        mutate(d)
        with pytest.raises(ConfigError) as excinfo:
            SimConfig.from_dict(d)
        assert excinfo.value.field == field

    def variant_c_config(self, **overrides) -> dict:
        d = {
            "variant": "C",
            "domain": {"kind": "interval", "length": TWO_PI, "n_cells": 64},
            "initial_condition": {"kind": "single_mode", "amplitude": 0.1, "wavenumber": 1},
            "feedback": {"alpha": 0.8, "beta": 0.1},
            "dt": 0.01,
            "horizon": 1.0,
        }
        d.update(overrides)
        return d

    def test_variant_c_parses(self):
        cfg = SimConfig.from_dict(self.variant_c_config())
        assert cfg.build_problem().variant == "C"

    def test_nondissipative_feedback_needs_explicit_flag(self):
        d = self.variant_c_config(feedback={"alpha": 0.4, "beta": 0.1})
        with pytest.raises(ConfigError) as excinfo:
            SimConfig.from_dict(d)
        assert excinfo.value.field == "feedback"
        d["allow_nondissipative"] = True
        assert SimConfig.from_dict(d).allow_nondissipative

    def test_conservative_pair_needs_explicit_flag(self):
        d = self.variant_c_config(feedback={"alpha": 0.5, "beta": 0.5})
        with pytest.raises(ConfigError):
            SimConfig.from_dict(d)
        d["allow_nondissipative"] = True
        SimConfig.from_dict(d)

    def test_solitary_wave_torus_only(self):
        d = self.variant_c_config(
            initial_condition={"kind": "solitary_wave", "speed": 1.5, "center": 0.0}
        )
        with pytest.raises(ConfigError) as excinfo:
            SimConfig.from_dict(d)
        assert excinfo.value.field == "initial_condition"

    def test_from_json_file_errors(self, tmp_path):
        with pytest.raises(ConfigError, match="does not exist"):
            SimConfig.from_json_file(str(tmp_path / "absent.json"))
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(ConfigError, match="not valid JSON"):
            SimConfig.from_json_file(str(bad))


class TestSolitaryWave:
    def test_profile_satisfies_the_traveling_wave_identity(self):
        # u(x,t) = phi(x - c t) with phi = A sech^2(kappa xi) solves the
        # undamped equation iff (1-c) phi' + c phi''' + phi phi' = 0
        c = 1.5
        amplitude = 3.0 * (c - 1.0)
        kappa = 0.5 * math.sqrt((c - 1.0) / c)
        xi = np.linspace(-20.0, 20.0, 4001)
        s = 1.0 / np.cosh(kappa * xi)
        t = np.tanh(kappa * xi)
        phi = amplitude * s**2
        dphi = -2.0 * amplitude * kappa * s**2 * t
        d3phi = 8.0 * amplitude * kappa**3 * s**2 * t * (2.0 * s**2 - t**2)
        residual = (1.0 - c) * dphi + c * d3phi + phi * dphi
        assert np.max(np.abs(residual)) <= 1e-10

    def test_generator_wraps_three_images(self):
        cfg = SimConfig.from_dict(
            small_config(
                domain={"kind": "torus", "n_points": 64},
                initial_condition={"kind": "solitary_wave", "speed": 1.5, "center": math.pi},
                damping={"kind": "constant", "amplitude": 0.0},
            )
        )
        u0 = cfg.build_initial()
        c = 1.5
        amplitude = 3.0 * (c - 1.0)
        kappa = 0.5 * math.sqrt((c - 1.0) / c)
        x = cfg.build_grid().nodes
        expected = np.zeros_like(x)
        for image in range(-3, 4):
            expected += amplitude / np.cosh(kappa * (x - math.pi + TWO_PI * image)) ** 2
        assert np.array_equal(u0.values, expected)


class TestRunSimulate:
    def test_zero_initial_data_writes_ledger_of_zeros(self, tmp_path):
        cfg = SimConfig.from_dict(small_config(initial_condition={"kind": "constant", "value": 0.0}))
        out = tmp_path / "zero"
        assert run_simulate(cfg, output_dir=str(out)) == 0
        rows = np.loadtxt(out / "ledger.csv", delimiter=",", skiprows=1, ndmin=2)
        assert rows.shape[1] == 6
        assert np.all(rows[:, 1:] == 0.0)
        report = json.loads((out / "report.json").read_text())
        assert report["status"] == "ok"
        assert report["E0"] == 0.0

    def test_artifacts_and_decay_report(self, tmp_path):
        cfg = SimConfig.from_dict(small_config())
        out = tmp_path / "run"
        assert run_simulate(cfg, output_dir=str(out)) == 0
        assert sorted(os.listdir(out)) == ["decay_report.json", "ledger.csv", "report.json", "snapshots"]
        snaps = sorted(os.listdir(out / "snapshots"))
        assert snaps[0] == "snap_000000.csv"
        assert all(name.startswith("snap_") and name.endswith(".csv") for name in snaps)
        decay = json.loads((out / "decay_report.json").read_text())
        # horizon 2.0 at snapshot period 0.2 gives the auto window 0.2
        assert decay["available"] is True
        assert decay["window"] == pytest.approx(0.2)
        assert decay["monotone"] is True
        assert decay["tail"] is not None
        report = json.loads((out / "report.json").read_text())
        assert report["records"] == len(np.loadtxt(out / "ledger.csv", delimiter=",", skiprows=1, ndmin=2))
        assert report["snapshots"] == len(snaps)
        assert report["total_dissipation"] > 0.0
        assert report["config"]["variant"] == "A"

    def test_short_horizon_reports_decay_unavailable(self, tmp_path):
        cfg = SimConfig.from_dict(small_config(horizon=0.1, snapshot_stride=5))
        out = tmp_path / "short"
        assert run_simulate(cfg, output_dir=str(out)) == 0
        decay = json.loads((out / "decay_report.json").read_text())
        assert decay["available"] is False
        assert "reason" in decay

    def test_invalid_config_file_exits_2_naming_field(self, tmp_path, capsys):
        bad = write_json(tmp_path / "bad.json", small_config(variant="C"))
        assert run_simulate(bad) == 2
        assert "field 'domain'" in capsys.readouterr().err

    def test_missing_config_file_exits_2(self, tmp_path, capsys):
        assert run_simulate(str(tmp_path / "none.json")) == 2
        assert "does not exist" in capsys.readouterr().err

    def test_blowup_exits_3_with_failure_time(self, tmp_path, capsys):
        cfg = SimConfig.from_dict(
            small_config(initial_condition={"kind": "single_mode", "amplitude": 1e200, "wavenumber": 1})
        )
        out = tmp_path / "blowup"
        with np.errstate(over="ignore", invalid="ignore"):
            assert run_simulate(cfg, output_dir=str(out)) == 3
        report = json.loads((out / "report.json").read_text())
        assert report["status"] == "integrator_failure"
        assert report["failure_time"] == pytest.approx(0.01)
        assert not (out / "ledger.csv").exists()
        assert "integrator failure" in capsys.readouterr().err

    def test_output_dir_env_override(self, tmp_path, monkeypatch):
        target = tmp_path / "from_env"
        monkeypatch.setenv("BBM_OUTPUT_DIR", str(target))
        cfg = SimConfig.from_dict(small_config(horizon=0.2, output_dir=str(tmp_path / "ignored")))
        assert run_simulate(cfg) == 0
        assert (target / "ledger.csv").exists()
        assert not (tmp_path / "ignored").exists()

    def test_determinism_byte_identical_outputs(self, tmp_path):
        cfg = small_config(
            initial_condition={"kind": "random_smooth", "seed": 42, "amplitude": 0.3, "cutoff": 6}
        )
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        assert run_simulate(SimConfig.from_dict(cfg), output_dir=str(out_a)) == 0
        assert run_simulate(SimConfig.from_dict(cfg), output_dir=str(out_b)) == 0
        for name in ("ledger.csv", "decay_report.json", "report.json"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes(), name
        for snap in os.listdir(out_a / "snapshots"):
            assert (out_a / "snapshots" / snap).read_bytes() == (out_b / "snapshots" / snap).read_bytes()

    def test_no_stray_temp_files(self, tmp_path):
        cfg = SimConfig.from_dict(small_config(horizon=0.5))
        out = tmp_path / "clean"
        assert run_simulate(cfg, output_dir=str(out)) == 0
        stray = [name for name in os.listdir(out) if name.startswith("tmp")]
        assert stray == []


class TestRunSweep:
    def sweep_spec(self, tmp_path, values, path="damping.amplitude") -> dict:
        return {
            "base": small_config(horizon=1.0, record_stride=20, snapshot_stride=50),
            "axes": [{"path": path, "values": values}],
            "output_dir": str(tmp_path / "sweep"),
        }

    def read_summary(self, tmp_path) -> list[dict]:
        lines = (tmp_path / "sweep" / "summary.csv").read_text().strip().splitlines()
        header = lines[0].split(",")
        return [dict(zip(header, line.split(","))) for line in lines[1:]]

    def test_single_zero_amplitude_cell_is_conservative(self, tmp_path):
        assert run_sweep(self.sweep_spec(tmp_path, [0.0])) == 0
        rows = self.read_summary(tmp_path)
        assert len(rows) == 1
        assert rows[0]["status"] == "ok"
        assert float(rows[0]["total_dissipation"]) == 0.0
        # undamped run conserves the H1 norm of the 0.2 cos x initial state
        assert float(rows[0]["final_h1_distance"]) == pytest.approx(0.2, rel=1e-6)

    def test_amplitude_grid_records_observables(self, tmp_path):
        assert run_sweep(self.sweep_spec(tmp_path, [0.1, 1.0, 10.0])) == 0
        rows = self.read_summary(tmp_path)
        assert [row["cell"] for row in rows] == ["0", "1", "2"]
        assert all(row["status"] == "ok" for row in rows)
        dissipation = [float(row["total_dissipation"]) for row in rows]
        assert all(v > 0.0 for v in dissipation)
        for index in range(3):
            cell_dir = tmp_path / "sweep" / f"cell_{index:04d}"
            assert (cell_dir / "ledger.csv").exists()
            assert (cell_dir / "report.json").exists()

    def test_single_cell_matches_run_simulate(self, tmp_path):
        spec = self.sweep_spec(tmp_path, [1.0])
        assert run_sweep(spec) == 0
        direct = tmp_path / "direct"
        assert run_simulate(SimConfig.from_dict(spec["base"]), output_dir=str(direct)) == 0
        sweep_ledger = (tmp_path / "sweep" / "cell_0000" / "ledger.csv").read_bytes()
        assert sweep_ledger == (direct / "ledger.csv").read_bytes()

    def test_cell_failures_recorded_not_fatal(self, tmp_path):
        spec = self.sweep_spec(tmp_path, [0.2, 1e200], path="initial_condition.amplitude")
        assert run_sweep(spec) == 0
        rows = self.read_summary(tmp_path)
        assert rows[0]["status"] == "ok"
        assert rows[1]["status"].startswith("failed:")
        assert rows[1]["final_h1_distance"] == "nan"

    def test_unknown_dotted_path_fails_per_cell(self, tmp_path):
        spec = self.sweep_spec(tmp_path, [1.0, 2.0], path="damping.slope")
        assert run_sweep(spec) == 0
        rows = self.read_summary(tmp_path)
        assert all(row["status"].startswith("failed:") for row in rows)

    def test_two_axes_product(self, tmp_path):
        spec = self.sweep_spec(tmp_path, [0.5, 1.0])
        spec["axes"].append({"path": "initial_condition.amplitude", "values": [0.1, 0.2, 0.3]})
        assert run_sweep(spec) == 0
        rows = self.read_summary(tmp_path)
        assert len(rows) == 6
        assert "initial_condition.amplitude" in rows[0]

    def test_sweep_determinism(self, tmp_path):
        spec_a = self.sweep_spec(tmp_path, [0.5, 2.0])
        spec_a["output_dir"] = str(tmp_path / "s1")
        spec_b = json.loads(json.dumps(spec_a))
        spec_b["output_dir"] = str(tmp_path / "s2")
        assert run_sweep(spec_a) == 0
        assert run_sweep(spec_b) == 0
        first = (tmp_path / "s1" / "summary.csv").read_text()
        second = (tmp_path / "s2" / "summary.csv").read_text()
        assert first == second

    @pytest.mark.parametrize(
        "mutate",
        [
            lambda s: s.pop("base"),
            lambda s: s.pop("axes"),
            lambda s: s.update(axes=[]),
            lambda s: s.update(axes=[{"path": "dt", "values": []}]),
            lambda s: s.update(axes=[{"values": [1.0]}]),
            lambda s: s.update(
                axes=[
                    {"path": "dt", "values": [0.1] * 101},
                    {"path": "horizon", "values": [1.0] * 101},
                ]
            ),
        ],
    )
    def test_invalid_sweep_specs_exit_2(self, tmp_path, mutate, capsys):
        spec = self.sweep_spec(tmp_path, [1.0])
        mutate(spec)
        assert run_sweep(spec) == 2
        assert "config error" in capsys.readouterr().err

    def test_sweep_file_round_trip(self, tmp_path):
        path = write_json(tmp_path / "sweep.json", self.sweep_spec(tmp_path, [0.0]))
        assert run_sweep(path) == 0
        assert (tmp_path / "sweep" / "summary.csv").exists()


class TestVerifyAndMain:
    def test_unknown_suite_exits_2(self, capsys):
        assert run_verify("bogus") == 2
        assert "unknown suite" in capsys.readouterr().err

    def test_operators_suite_passes(self, capsys):
        assert run_verify("operators") == 0
        lines = [line for line in capsys.readouterr().out.splitlines() if line]
        assert all(line.startswith("PASS") for line in lines)
        assert len(lines) >= 15

    def test_main_dispatch(self, tmp_path, capsys):
        bad = write_json(tmp_path / "bad.json", small_config(variant="C"))
        assert main(["simulate", bad]) == 2
        capsys.readouterr()
        with pytest.raises(SystemExit):
            main(["verify", "bogus"])
        capsys.readouterr()


class TestRegressionBaseline:
    def test_reference_run_matches_committed_ledger(self, tmp_path):
        config = os.path.join(CONFIG_DIR, "reference_variant_a.json")
        out = tmp_path / "reference"
        assert run_simulate(config, output_dir=str(out)) == 0
        fresh_bytes = (out / "ledger.csv").read_bytes()
        baseline_path = os.path.join(BASELINE_DIR, "reference_ledger_A.csv")
        with open(baseline_path, "rb") as handle:
            baseline_bytes = handle.read()
        if fresh_bytes == baseline_bytes:
            return  # bit-for-bit on the generating platform
        fresh = np.loadtxt(out / "ledger.csv", delimiter=",", skiprows=1, ndmin=2)
        baseline = np.loadtxt(baseline_path, delimiter=",", skiprows=1, ndmin=2)
        assert fresh.shape == baseline.shape
        for column in range(fresh.shape[1]):
            scale = np.max(np.abs(baseline[:, column]))
            assert np.allclose(
                fresh[:, column], baseline[:, column], rtol=1e-12, atol=1e-12 * max(scale, 1e-30)
            ), f"ledger column {column} drifted"

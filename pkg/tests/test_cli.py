"""End-to-end tests of the command-line pipeline and artifact formats."""

import json
import math
from pathlib import Path

import numpy as np
import pytest

from windtree import io
from windtree.billiard import simulate, state_from_slope
from windtree.cli import main
from windtree.sweep import SweepSpec, build_sweep

SMALL_CONFIG = {
    "sweep": {"slope_start": 1.5, "slope_step": 0.01, "count": 10,
              "k_min": 20, "k_max": 60},
    "hmm": {"m": 2, "max_iters": 5},
    "simulate": {"slope": 2.0, "n_collisions": 1},
}


def write_config(tmp_path, doc) -> str:
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc))
    return str(path)


class TestSimulateCommand:
    def test_single_collision_rows(self, tmp_path):
        rc = main(["simulate", "--out", str(tmp_path), "--slope", "2.0",
                   "--collisions", "1"])
        assert rc == 0
        rows = io.read_trajectory_csv(tmp_path / "trajectory.csv")
        assert rows[0] == {"k": 0, "x": 0.0, "y": 0.0, "t": 0.0, "wall": ""}
        assert rows[1]["k"] == 1 and rows[1]["wall"] == "Left"
        assert rows[1]["x"] == 0.5 and abs(rows[1]["y"] - 1.0) <= 1e-12
        assert (tmp_path / "trajectory.svg").read_text().startswith("<svg")

    def test_zero_collisions(self, tmp_path):
        rc = main(["simulate", "--out", str(tmp_path), "--collisions", "0"])
        assert rc == 0
        rows = io.read_trajectory_csv(tmp_path / "trajectory.csv")
        assert len(rows) == 1 and rows[0]["k"] == 0
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["n_collisions"] == 0

    def test_recurrent_label_in_summary(self, tmp_path):
        rc = main(["simulate", "--out", str(tmp_path), "--slope", "1.414",
                   "--collisions", "300"])
        assert rc == 0
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["motion"]["label"] == "Recurrent"

    def test_trajectory_json_roundtrip(self, tmp_path):
        rc = main(["simulate", "--out", str(tmp_path), "--slope", "1.618",
                   "--collisions", "25"])
        assert rc == 0
        log = io.read_trajectory_json(tmp_path / "trajectory.json")
        fresh = simulate(state_from_slope(1.618), 25)
        assert [tuple(e.point) for e in log.events] == \
               [tuple(e.point) for e in fresh.events]


class TestSweepCommand:
    def test_small_sweep(self, tmp_path):
        cfg = write_config(tmp_path, SMALL_CONFIG)
        rc = main(["sweep", "--config", cfg, "--out", str(tmp_path)])
        assert rc == 0
        obs = io.read_sweep_csv(tmp_path / "sweep.csv")
        assert len(obs) == 10
        meta = json.loads((tmp_path / "sweep_meta.json").read_text())
        assert meta["log_base"] == "e" and meta["failures"] == []

    def test_rerun_is_byte_identical(self, tmp_path):
        cfg = write_config(tmp_path, SMALL_CONFIG)
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["sweep", "--config", cfg, "--out", str(a)]) == 0
        assert main(["sweep", "--config", cfg, "--out", str(b)]) == 0
        assert (a / "sweep.csv").read_bytes() == (b / "sweep.csv").read_bytes()

    def test_jobs_do_not_change_output(self, tmp_path):
        cfg = write_config(tmp_path, SMALL_CONFIG)
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["sweep", "--config", cfg, "--out", str(a)]) == 0
        assert main(["sweep", "--config", cfg, "--out", str(b), "--jobs", "3"]) == 0
        assert (a / "sweep.csv").read_bytes() == (b / "sweep.csv").read_bytes()

    def test_count_one(self, tmp_path):
        doc = dict(SMALL_CONFIG)
        doc["sweep"] = {"slope_start": 1.618, "slope_step": 0.0025, "count": 1,
                        "k_min": 5, "k_max": 20}
        cfg = write_config(tmp_path, doc)
        assert main(["sweep", "--config", cfg, "--out", str(tmp_path)]) == 0
        assert len(io.read_sweep_csv(tmp_path / "sweep.csv")) == 1

    def test_majority_failures_exit_nonzero(self, tmp_path, monkeypatch):
        import windtree.cli as cli_mod
        from windtree.sweep import SweepFailure, SweepResult

        def all_fail(spec, jobs=1):
            failures = [SweepFailure(t, spec.slope_at(t), "synthetic corridor")
                        for t in range(1, spec.count + 1)]
            return SweepResult(spec=spec, observations=[], failures=failures)

        monkeypatch.setattr(cli_mod, "build_sweep", all_fail)
        cfg = write_config(tmp_path, SMALL_CONFIG)
        assert main(["sweep", "--config", cfg, "--out", str(tmp_path)]) == 3


class TestFitCommand:
    @pytest.fixture()
    def sweep_dir(self, tmp_path):
        cfg = write_config(tmp_path, SMALL_CONFIG)
        assert main(["sweep", "--config", cfg, "--out", str(tmp_path)]) == 0
        return tmp_path

    def test_fit_writes_model_and_residuals(self, sweep_dir):
        rc = main(["fit", "--out", str(sweep_dir), "--states", "2", "--iters", "5"])
        assert rc == 0
        model = json.loads((sweep_dir / "model.json").read_text())
        assert model["m"] == 2
        assert len(model["loglik_trace"]) == 5
        trace = model["loglik_trace"]
        assert all(b >= a - 1e-9 for a, b in zip(trace, trace[1:]))
        rows = io.read_residuals_csv(sweep_dir / "residuals.csv")
        hist = json.loads((sweep_dir / "histogram.json").read_text())
        assert sum(hist["counts"]) == len(rows) == 10

    def test_single_state_fit_is_sample_mean(self, sweep_dir):
        rc = main(["fit", "--out", str(sweep_dir), "--states", "1", "--iters", "3"])
        assert rc == 0
        model = json.loads((sweep_dir / "model.json").read_text())
        obs = io.read_sweep_csv(sweep_dir / "sweep.csv")
        xs = np.array([o.log_min_distance for o in obs])
        assert model["mu"][0] == pytest.approx(xs.mean(), abs=1e-9)

    def test_refit_is_byte_identical(self, sweep_dir):
        assert main(["fit", "--out", str(sweep_dir), "--states", "2"]) == 0
        first = (sweep_dir / "model.json").read_bytes()
        assert main(["fit", "--out", str(sweep_dir), "--states", "2"]) == 0
        assert (sweep_dir / "model.json").read_bytes() == first

    def test_missing_csv_is_config_error(self, tmp_path):
        assert main(["fit", "--out", str(tmp_path)]) == 2

    def test_malformed_csv_is_config_error(self, tmp_path):
        bad = tmp_path / "sweep.csv"
        bad.write_text("a,b\n1,2\n")
        assert main(["fit", "--out", str(tmp_path), str(bad)]) == 2


class TestDiagnoseCommand:
    def test_full_pipeline_then_diagnose(self, tmp_path, capsys):
        cfg = write_config(tmp_path, SMALL_CONFIG)
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path),
                     "--collisions", "40"]) == 0
        assert main(["sweep", "--config", cfg, "--out", str(tmp_path)]) == 0
        assert main(["fit", "--config", cfg, "--out", str(tmp_path)]) == 0
        assert main(["diagnose", "--config", cfg, "--out", str(tmp_path)]) == 0
        out = capsys.readouterr().out
        assert "diagnostics passed" in out

    def test_tampered_artifact_fails(self, tmp_path):
        cfg = write_config(tmp_path, SMALL_CONFIG)
        assert main(["sweep", "--config", cfg, "--out", str(tmp_path)]) == 0
        path = tmp_path / "sweep.csv"
        lines = path.read_text().splitlines()
        t, slope, D, logD = lines[1].split(",")
        lines[1] = ",".join([t, slope, D, str(float(logD) + 0.5)])
        path.write_text("\n".join(lines) + "\n")
        assert main(["diagnose", "--config", cfg, "--out", str(tmp_path)]) == 4

    def test_empty_directory_is_config_error(self, tmp_path):
        assert main(["diagnose", "--out", str(tmp_path)]) == 2


class TestConfigHandling:
    def test_invalid_json_exit_code(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{nope")
        assert main(["sweep", "--config", str(bad), "--out", str(tmp_path)]) == 2

    def test_unknown_field_rejected(self, tmp_path):
        cfg = write_config(tmp_path, {"swep": {}})
        assert main(["sweep", "--config", cfg, "--out", str(tmp_path)]) == 2

    def test_bad_variant_rejected(self, tmp_path):
        cfg = write_config(tmp_path, {"hmm": {"residual_variant": "upside-down"}})
        assert main(["fit", "--config", cfg, "--out", str(tmp_path)]) == 2

    def test_checked_in_reference_config_loads(self):
        path = Path(__file__).resolve().parent.parent / "configs" / "reference.json"
        doc = json.loads(path.read_text())
        assert doc["sweep"]["count"] == 300
        assert doc["hmm"] == {"m": 3, "gamma_diag_init": 0.8, "max_iters": 15,
                              "tol": 0.0, "residual_variant": "conditional"}

    def test_defaults_are_the_reference_pipeline(self):
        from windtree.config import PipelineConfig

        config = PipelineConfig()
        assert (config.sweep.slope_start, config.sweep.slope_step,
                config.sweep.count, config.sweep.k_min,
                config.sweep.k_max) == (1.4140, 0.0025, 300, 500, 1000)
        assert (config.hmm.m, config.hmm.gamma_diag_init, config.hmm.max_iters,
                config.hmm.tol, config.hmm.residual_variant) == \
               (3, 0.8, 15, 0.0, "conditional")


class TestArtifactFormats:
    def test_trajectory_csv_text_roundtrip(self):
        log = simulate(state_from_slope(1.732), 30)
        text = io.trajectory_csv_text(log)
        assert text.splitlines()[0] == "k,x,y,t,wall"
        parsed_rows = [
            {"k": int(r.split(",")[0]), "x": float(r.split(",")[1]),
             "y": float(r.split(",")[2]), "t": float(r.split(",")[3]),
             "wall": r.split(",")[4]}
            for r in text.splitlines()[1:]
        ]
        assert io.rows_to_trajectory_csv_text(parsed_rows) == text

    def test_sweep_csv_text_roundtrip(self):
        result = build_sweep(SweepSpec(count=5, k_min=10, k_max=40))
        text = io.sweep_csv_text(result)
        assert text.splitlines()[0] == "t,slope,D,logD"
        for line, obs in zip(text.splitlines()[1:], result.observations):
            _, _, D, logD = line.split(",")
            assert float(D) == obs.min_distance
            assert abs(float(logD) - math.log(float(D))) <= 1e-12

    def test_fmt_keeps_17_significant_digits(self):
        values = [math.pi, 1.0 / 3.0, 1234567.89012345, 5e-324, -0.0]
        for v in values:
            assert float(io.fmt(v)) == v

    def test_json_text_idempotent(self, tmp_path):
        doc = {"a": [1.0, math.pi], "b": {"c": "x"}}
        path = tmp_path / "doc.json"
        io.write_json(doc, path)
        assert io.json_roundtrips(path)

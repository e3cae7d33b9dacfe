import json
import os
import subprocess
import sys

import numpy as np
import pytest

from jaca.cli import main

CASE_CONFIG = {
    "n_labeled": 40,
    "n_unlabeled": 12,
    "dims": [6, 5],
    "n_classes": 2,
    "priors": [0.4, 0.6],
    "class_strength": [2.0, 2.0],
    "covariance": [{"kind": "ar", "phi": 0.8}, {"kind": "ar", "phi": 0.5}],
    "nonzero_rows": 3,
    "seed": 11,
}


def _write_json(path, doc):
    path.write_text(json.dumps(doc), encoding="utf-8")
    return str(path)


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Simulated data plus a fitted model shared by the CLI tests."""
    root = tmp_path_factory.mktemp("cli")
    sim_cfg = _write_json(root / "sim.json", CASE_CONFIG)
    data_dir = root / "data"
    assert main(["simulate", "--config", sim_cfg, "--output", str(data_dir)]) == 0
    run_cfg = {
        "views": [str(data_dir / "view1.csv"), str(data_dir / "view2.csv")],
        "labels": str(data_dir / "labels.csv"),
        "alpha": 0.5,
        "rho": 0.25,
        "epsilon": 0.3,
        "semi_supervised": True,
        "seed": 0,
    }
    fit_cfg = _write_json(root / "run.json", run_cfg)
    model_dir = root / "model"
    assert main(["fit", "--config", fit_cfg, "--output", str(model_dir)]) == 0
    return {
        "root": root,
        "sim_cfg": sim_cfg,
        "run_cfg": fit_cfg,
        "run_doc": run_cfg,
        "data_dir": data_dir,
        "model": str(model_dir / "model.json"),
    }


class TestSimulate:
    def test_outputs_exist(self, workspace):
        data = workspace["data_dir"]
        for name in ("view1.csv", "view2.csv", "labels.csv", "truth.json"):
            assert (data / name).exists()
        labels = (data / "labels.csv").read_text().strip().splitlines()
        assert len(labels) == 1 + 52
        # unlabeled tail rows have empty label cells
        assert labels[-1].endswith(",")

    def test_seed_repeat_byte_identical(self, workspace, tmp_path):
        out2 = tmp_path / "again"
        assert main(
            ["simulate", "--config", workspace["sim_cfg"], "--output", str(out2)]
        ) == 0
        for name in ("view1.csv", "view2.csv", "labels.csv", "truth.json"):
            a = (workspace["data_dir"] / name).read_bytes()
            b = (out2 / name).read_bytes()
            assert a == b

    def test_seed_override_changes_data(self, workspace, tmp_path):
        out2 = tmp_path / "seeded"
        assert main(
            ["simulate", "--config", workspace["sim_cfg"], "--output",
             str(out2), "--seed", "99"]
        ) == 0
        a = (workspace["data_dir"] / "view1.csv").read_bytes()
        assert a != (out2 / "view1.csv").read_bytes()

    def test_shared_factor_truth_blocks(self, tmp_path):
        doc = dict(CASE_CONFIG, extra_corrs=[0.6, 0.5], seed=3)
        cfg = _write_json(tmp_path / "sim.json", doc)
        out = tmp_path / "out"
        assert main(["simulate", "--config", cfg, "--output", str(out)]) == 0
        truth = json.loads((out / "truth.json").read_text())
        shared = np.asarray(truth["shared_loadings"][0])
        assert shared.shape == (6, 2)
        assert np.any(shared != 0)

    def test_reference_two_view_protocol_shape(self, tmp_path):
        # 160 labeled + 100 unlabeled subjects, two 100-dimensional views
        doc = {
            "n_labeled": 160, "n_unlabeled": 100, "dims": [100, 100],
            "n_classes": 2, "priors": [0.4, 0.6],
            "class_strength": [2.0, 2.0],
            "covariance": [
                {"kind": "ar", "phi": 0.8}, {"kind": "ar", "phi": 0.5}
            ],
            "nonzero_rows": 10, "seed": 0,
        }
        cfg = _write_json(tmp_path / "case1.json", doc)
        out = tmp_path / "case1"
        assert main(["simulate", "--config", cfg, "--output", str(out)]) == 0
        view1 = (out / "view1.csv").read_text().strip().splitlines()
        assert len(view1) == 1 + 260
        assert len(view1[0].split(",")) == 1 + 100
        labels = (out / "labels.csv").read_text().strip().splitlines()[1:]
        filled = [r for r in labels if not r.endswith(",")]
        assert len(filled) == 160 and len(labels) == 260


class TestFitPredictEvaluate:
    def test_model_and_figure_written(self, workspace):
        model_dir = os.path.dirname(workspace["model"])
        assert os.path.exists(workspace["model"])
        assert os.path.exists(os.path.join(model_dir, "objective_trace.png"))

    def test_predict_writes_csv(self, workspace, tmp_path):
        out = tmp_path / "pred"
        code = main(
            ["predict", "--config", workspace["run_cfg"], "--model",
             workspace["model"], "--output", str(out)]
        )
        assert code == 0
        lines = (out / "predictions.csv").read_text().strip().splitlines()
        assert lines[0] == "id,predicted_label,score_1,score_2"
        assert len(lines) == 1 + 52

    def test_predict_matches_in_process(self, workspace, tmp_path):
        from jaca import load_views, predict_dataset
        from jaca.io import load_model

        out = tmp_path / "pred2"
        assert main(
            ["predict", "--config", workspace["run_cfg"], "--model",
             workspace["model"], "--views", "1,2", "--output", str(out)]
        ) == 0
        doc = workspace["run_doc"]
        ds = load_views(doc["views"], doc["labels"])
        labels, disc = predict_dataset(load_model(workspace["model"]), ds)
        rows = (out / "predictions.csv").read_text().strip().splitlines()[1:]
        got = np.array([int(r.split(",")[1]) for r in rows])
        got_scores = np.array(
            [[float(v) for v in r.split(",")[2:]] for r in rows]
        )
        assert np.array_equal(got, labels)
        assert np.max(np.abs(got_scores - disc)) <= 1e-12

    def test_evaluate_metrics(self, workspace, tmp_path):
        out = tmp_path / "eval"
        code = main(
            ["evaluate", "--config", workspace["run_cfg"], "--model",
             workspace["model"], "--truth",
             str(workspace["data_dir"] / "truth.json"), "--output", str(out)]
        )
        assert code == 0
        metrics = json.loads((out / "metrics.json").read_text())
        assert set(metrics["misclassification"]) == {"view_1", "view_2", "joint"}
        assert len(metrics["cardinality"]) == 2
        assert "sum_correlation" in metrics
        assert len(metrics["estimation_correlation"]) == 2
        assert len(metrics["precision"]) == 2
        assert (out / "metrics.png").exists()

    def test_non_converged_fit_still_exits_zero(self, workspace, tmp_path):
        doc = dict(workspace["run_doc"], max_iter=1, epsilon=0.05)
        cfg = _write_json(tmp_path / "short.json", doc)
        out = tmp_path / "short_model"
        assert main(["fit", "--config", cfg, "--output", str(out)]) == 0
        model = json.loads((out / "model.json").read_text())
        assert model["converged"] is False

    def test_evaluate_skips_view_subsets_without_subjects(self, workspace, tmp_path):
        # drop view 2 for every subject in a copy of the data
        data = workspace["data_dir"]
        lines = (data / "view2.csv").read_text().strip().splitlines()
        width = len(lines[0].split(",")) - 1
        gutted = [lines[0]] + [
            r.split(",")[0] + "," + ",".join([""] * width) for r in lines[1:]
        ]
        crippled = tmp_path / "view2.csv"
        crippled.write_text("\n".join(gutted) + "\n", encoding="utf-8")
        doc = dict(workspace["run_doc"])
        doc["views"] = [str(data / "view1.csv"), str(crippled)]
        cfg = _write_json(tmp_path / "eval.json", doc)
        out = tmp_path / "eval_missing"
        assert main(
            ["evaluate", "--config", cfg, "--model", workspace["model"],
             "--output", str(out)]
        ) == 0
        metrics = json.loads((out / "metrics.json").read_text())
        assert metrics["misclassification"]["view_2"] is None
        assert metrics["misclassification"]["joint"] is None
        assert metrics["misclassification"]["view_1"] is not None

    def test_fit_at_critical_penalty_zero_cardinality(self, workspace, tmp_path):
        doc = dict(workspace["run_doc"], epsilon=1.0)
        cfg = _write_json(tmp_path / "crit.json", doc)
        out = tmp_path / "crit_model"
        assert main(["fit", "--config", cfg, "--output", str(out)]) == 0
        model = json.loads((out / "model.json").read_text())
        assert all(
            all(all(v == 0 for v in row) for row in block)
            for block in model["coefficients"]
        )


class TestCv:
    def test_report_summary_figure(self, workspace, tmp_path):
        doc = dict(workspace["run_doc"])
        doc.pop("rho")
        doc.pop("epsilon")
        doc.update(rho_grid=[0.25, 0.75], epsilon_grid=[0.6, 0.3], n_folds=3)
        cfg = _write_json(tmp_path / "cv.json", doc)
        out = tmp_path / "cv_out"
        assert main(
            ["cv", "--config", cfg, "--output", str(out), "--threads", "1"]
        ) == 0
        rows = (out / "cv_report.csv").read_text().strip().splitlines()
        assert rows[0] == "rho,epsilon,fold,criterion"
        assert len(rows) == 1 + 2 * 2 * 3
        summary = json.loads((out / "cv_summary.json").read_text())
        assert summary["best_rho"] in (0.25, 0.75)
        assert summary["best_epsilon"] in (0.6, 0.3)
        assert (out / "cv_criterion.png").exists()

    def test_no_plots_flag(self, workspace, tmp_path):
        doc = dict(workspace["run_doc"])
        doc.pop("rho")
        doc.pop("epsilon")
        doc.update(rho_grid=[0.5], epsilon_grid=[0.4], n_folds=2)
        cfg = _write_json(tmp_path / "cv.json", doc)
        out = tmp_path / "cv_noplot"
        assert main(
            ["cv", "--config", cfg, "--output", str(out), "--no-plots"]
        ) == 0
        assert not (out / "cv_criterion.png").exists()
        assert (out / "cv_summary.json").exists()


class TestExitCodes:
    def test_usage_error_is_one(self):
        assert main(["frobnicate"]) == 1
        assert main(["fit"]) == 1  # missing --config

    def test_missing_file_is_two(self, tmp_path):
        assert main(
            ["fit", "--config", str(tmp_path / "nope.json"), "--output",
             str(tmp_path)]
        ) == 2

    def test_unknown_config_key_is_three(self, workspace, tmp_path):
        doc = dict(workspace["run_doc"], surprise=1)
        cfg = _write_json(tmp_path / "bad.json", doc)
        assert main(["fit", "--config", cfg, "--output", str(tmp_path)]) == 3

    def test_schema_violation_is_three(self, workspace, tmp_path):
        doc = dict(workspace["run_doc"], alpha=2.0)
        cfg = _write_json(tmp_path / "bad2.json", doc)
        assert main(["fit", "--config", cfg, "--output", str(tmp_path)]) == 3

    def test_missing_required_view_is_three(self, workspace, tmp_path):
        # drop view 2 for one subject, then ask for a prediction using it
        data = workspace["data_dir"]
        crippled = tmp_path / "view2.csv"
        lines = (data / "view2.csv").read_text().strip().splitlines()
        sid = lines[1].split(",")[0]
        lines[1] = sid + "," + ",".join([""] * (len(lines[0].split(",")) - 1))
        crippled.write_text("\n".join(lines) + "\n", encoding="utf-8")
        doc = dict(workspace["run_doc"])
        doc["views"] = [str(data / "view1.csv"), str(crippled)]
        cfg = _write_json(tmp_path / "pred.json", doc)
        code = main(
            ["predict", "--config", cfg, "--model", workspace["model"],
             "--views", "2", "--output", str(tmp_path / "o")]
        )
        assert code == 3

    def test_console_entry_point(self):
        proc = subprocess.run(
            [sys.executable, "-m", "jaca.cli", "--help"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        assert "simulate" in proc.stdout and "evaluate" in proc.stdout

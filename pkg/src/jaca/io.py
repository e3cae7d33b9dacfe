"""On-disk formats: model JSON, prediction/report CSVs, truth JSON, configs.

All numeric JSON values use Python's shortest round-trip float text, so a
saved model reloads to the exact same float64 values. NaN placeholders
(absent training projections) are stored as JSON null.
"""

from __future__ import annotations

import csv
import json
import os

import numpy as np
from jsonschema import Draft202012Validator

from .dataset import DataError, StandardizationTransform
from .pipeline import TrainedModel
from .simulate import SimulationConfig, SimulationTruth

RUN_CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "alpha": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "rho": {"type": "number", "minimum": 0, "maximum": 1},
        "rho_grid": {
            "type": "array", "minItems": 1,
            "items": {"type": "number", "minimum": 0, "maximum": 1},
        },
        "epsilon": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "epsilon_grid": {
            "type": "array", "minItems": 1,
            "items": {"type": "number", "minimum": 1e-4, "maximum": 1},
        },
        "n_folds": {"type": "integer", "minimum": 2},
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "max_iter": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
        "semi_supervised": {"type": "boolean"},
        "views": {"type": "array", "minItems": 2, "items": {"type": "string"}},
        "labels": {"type": "string"},
        "output_dir": {"type": "string"},
    },
    "required": ["views"],
}

SIMULATION_CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "n_labeled": {"type": "integer", "minimum": 1},
        "n_unlabeled": {"type": "integer", "minimum": 0},
        "dims": {"type": "array", "minItems": 2, "items": {"type": "integer", "minimum": 1}},
        "n_classes": {"type": "integer", "minimum": 2},
        "priors": {"type": "array", "items": {"type": "number"}},
        "class_strength": {
            "type": "array",
            "items": {
                "anyOf": [
                    {"type": "number", "exclusiveMinimum": 0},
                    {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
                ]
            },
        },
        "covariance": {
            "type": "array",
            "items": {
                "type": "object",
                "additionalProperties": False,
                "properties": {
                    "kind": {"enum": ["ar", "identity"]},
                    "phi": {"type": "number"},
                },
                "required": ["kind"],
            },
        },
        "nonzero_rows": {"type": "integer", "minimum": 1},
        "extra_corrs": {
            "type": "array",
            "items": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        },
        "seed": {"type": "integer", "minimum": 0},
    },
    "required": [
        "n_labeled", "n_unlabeled", "dims", "n_classes", "priors",
        "class_strength", "covariance",
    ],
}


def _validate(document, schema, what):
    errors = sorted(
        Draft202012Validator(schema).iter_errors(document), key=str
    )
    if errors:
        first = errors[0]
        where = "/".join(str(p) for p in first.absolute_path) or "<root>"
        raise DataError(f"{what}: {where}: {first.message}")


def load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON: {exc}") from None


def load_run_config(path):
    doc = load_json(path)
    _validate(doc, RUN_CONFIG_SCHEMA, f"{path}")
    return doc


def load_simulation_config(path):
    doc = load_json(path)
    _validate(doc, SIMULATION_CONFIG_SCHEMA, f"{path}")
    for spec in doc["covariance"]:
        if spec["kind"] == "ar" and "phi" not in spec:
            raise DataError(f"{path}: ar covariance needs 'phi'")
    covariance = tuple(
        ("ar", spec["phi"]) if spec["kind"] == "ar" else ("identity",)
        for spec in doc["covariance"]
    )
    strength = tuple(
        tuple(c) if isinstance(c, list) else c for c in doc["class_strength"]
    )
    cfg = SimulationConfig(
        n_labeled=doc["n_labeled"],
        n_unlabeled=doc["n_unlabeled"],
        dims=tuple(doc["dims"]),
        n_classes=doc["n_classes"],
        priors=tuple(doc["priors"]),
        class_strength=strength,
        covariance=covariance,
        nonzero_rows=doc.get("nonzero_rows", 10),
        extra_corrs=tuple(doc.get("extra_corrs", ())),
        seed=doc.get("seed", 0),
    )
    try:
        cfg.validate()
    except ValueError as exc:
        raise DataError(f"{path}: {exc}") from None
    return cfg


def _array_out(a):
    """Nested lists with NaN encoded as null."""
    a = np.asarray(a, dtype=float)
    out = a.astype(object)
    out[~np.isfinite(a)] = None
    return out.tolist()


def _array_in(rows):
    a = np.array(
        [[np.nan if v is None else v for v in row] for row in rows], dtype=float
    )
    return a


def save_model(model, path):
    doc = {
        "format": "jaca-model",
        "version": 1,
        "alpha": model.alpha,
        "rho": model.rho,
        "lambdas": list(map(float, model.lambdas)),
        "n_classes": model.n_classes,
        "feature_names": model.feature_names,
        "coefficients": [b.tolist() for b in model.coefficients],
        "transforms": [
            {"mean": tf.mean.tolist(), "scale": tf.scale.tolist()}
            for tf in model.transforms
        ],
        "training_scores": [_array_out(b) for b in model.training_scores],
        "training_labels": model.training_labels.tolist(),
        "iterations": model.iterations,
        "converged": model.converged,
        "kkt_residual": model.kkt_residual,
        "objective": model.objective,
        "objective_trace": [float(v) for v in model.objective_trace],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_model(path):
    doc = load_json(path)
    if doc.get("format") != "jaca-model":
        raise DataError(f"{path}: not a model file")
    return TrainedModel(
        coefficients=[np.asarray(b, dtype=float) for b in doc["coefficients"]],
        transforms=[
            StandardizationTransform(
                np.asarray(t["mean"], dtype=float),
                np.asarray(t["scale"], dtype=float),
            )
            for t in doc["transforms"]
        ],
        alpha=doc["alpha"],
        rho=doc["rho"],
        lambdas=np.asarray(doc["lambdas"], dtype=float),
        n_classes=doc["n_classes"],
        feature_names=doc["feature_names"],
        training_scores=[_array_in(b) for b in doc["training_scores"]],
        training_labels=np.asarray(doc["training_labels"], dtype=int),
        iterations=doc["iterations"],
        converged=doc["converged"],
        kkt_residual=doc["kkt_residual"],
        objective=doc["objective"],
        objective_trace=np.asarray(doc["objective_trace"], dtype=float),
    )


def write_views_csv(ds, out_dir):
    """One CSV per view plus labels.csv; missing entries are left empty."""
    paths = []
    for d, view in enumerate(ds.views):
        path = os.path.join(out_dir, f"view{d + 1}.csv")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id"] + list(ds.feature_names[d]))
            for i, sid in enumerate(ds.subject_ids):
                if ds.present[i, d]:
                    writer.writerow([sid] + [repr(float(v)) for v in view[i]])
                else:
                    writer.writerow([sid] + [""] * view.shape[1])
        paths.append(path)
    labels_path = os.path.join(out_dir, "labels.csv")
    with open(labels_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "label"])
        for i, sid in enumerate(ds.subject_ids):
            writer.writerow([sid, ds.labels[i] if ds.labels[i] > 0 else ""])
    return paths, labels_path


def save_truth(truth, cfg, path):
    doc = {
        "format": "jaca-truth",
        "version": 1,
        "config": {
            "n_labeled": cfg.n_labeled,
            "n_unlabeled": cfg.n_unlabeled,
            "dims": list(cfg.dims),
            "n_classes": cfg.n_classes,
            "priors": list(map(float, cfg.priors)),
            "nonzero_rows": cfg.nonzero_rows,
            "extra_corrs": list(map(float, cfg.extra_corrs)),
            "seed": cfg.seed,
        },
        "class_loadings": [m.tolist() for m in truth.class_loadings],
        "shared_loadings": [m.tolist() for m in truth.shared_loadings],
        "noise_covariance": [m.tolist() for m in truth.noise_covariance],
        "discriminants": [m.tolist() for m in truth.discriminants],
        "support": [s.tolist() for s in truth.support],
        "marginal_covariance": [m.tolist() for m in truth.marginal_covariance],
        "cross_covariance": {
            f"{d + 1},{l + 1}": m.tolist()
            for (d, l), m in truth.cross_covariance.items()
        },
        "class_strength": [s.tolist() for s in truth.class_strength],
        "priors": truth.priors.tolist(),
        "indicator_map": truth.indicator_map.tolist(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_truth(path):
    doc = load_json(path)
    if doc.get("format") != "jaca-truth":
        raise DataError(f"{path}: not a truth file")
    cross = {}
    for key, m in doc["cross_covariance"].items():
        d, l = key.split(",")
        cross[(int(d) - 1, int(l) - 1)] = np.asarray(m, dtype=float)
    return SimulationTruth(
        class_loadings=[np.asarray(m, dtype=float) for m in doc["class_loadings"]],
        shared_loadings=[np.asarray(m, dtype=float) for m in doc["shared_loadings"]],
        noise_covariance=[np.asarray(m, dtype=float) for m in doc["noise_covariance"]],
        discriminants=[np.asarray(m, dtype=float) for m in doc["discriminants"]],
        support=[np.asarray(s, dtype=int) for s in doc["support"]],
        marginal_covariance=[
            np.asarray(m, dtype=float) for m in doc["marginal_covariance"]
        ],
        cross_covariance=cross,
        class_strength=[np.asarray(s, dtype=float) for s in doc["class_strength"]],
        extra_corrs=np.asarray(doc["config"]["extra_corrs"], dtype=float),
        priors=np.asarray(doc["priors"], dtype=float),
        indicator_map=np.asarray(doc["indicator_map"], dtype=float),
    )


def write_predictions_csv(path, subject_ids, labels, discriminants):
    n_classes = discriminants.shape[1]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["id", "predicted_label"]
            + [f"score_{k + 1}" for k in range(n_classes)]
        )
        for sid, label, row in zip(subject_ids, labels, discriminants):
            writer.writerow([sid, int(label)] + [repr(float(v)) for v in row])


def write_cv_report(cv, out_dir):
    """Per-cell fold results as CSV plus a JSON summary of the selection."""
    report_path = os.path.join(out_dir, "cv_report.csv")
    with open(report_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rho", "epsilon", "fold", "criterion"])
        n_folds = cv.per_fold.shape[0]
        for ri, rho in enumerate(cv.rho_grid):
            for ei, eps in enumerate(cv.epsilon_grid):
                for f in range(n_folds):
                    writer.writerow(
                        [repr(float(rho)), repr(float(eps)), f,
                         repr(float(cv.per_fold[f, ri, ei]))]
                    )
    summary_path = os.path.join(out_dir, "cv_summary.json")
    with open(summary_path, "w", encoding="utf-8") as fh:
        json.dump(
            {
                "best_rho": cv.best_rho,
                "best_epsilon": cv.best_epsilon,
                "rho_grid": cv.rho_grid.tolist(),
                "epsilon_grid": cv.epsilon_grid.tolist(),
                "criterion": _array_out(cv.criterion),
                "lambda_max_per_fold": cv.lambda_max_per_fold.tolist(),
                "fold_sizes": np.bincount(cv.fold_assignment).tolist(),
            },
            fh,
        )
        fh.write("\n")
    return report_path, summary_path

"""Command line entry point.

Subcommands: simulate, fit, cv, predict, evaluate. All randomness is seeded
from the config (or the --seed override). Report paths write delimited
output plus a rendered figure unless --no-plots is given.

Exit codes: 0 success, 1 usage, 2 I/O failure, 3 data-contract violation.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import io, pipeline, plots, select, simulate, solver
from .classify import misclassification_rate
from .dataset import DataError, load_views

USAGE_EXIT = 1
IO_EXIT = 2
DATA_EXIT = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(USAGE_EXIT)


def _out_dir(args, config):
    out = args.output or config.get("output_dir")
    if not out:
        raise DataError("no output directory: give --output or output_dir")
    os.makedirs(out, exist_ok=True)
    return out


def _load_data(config, need_labels):
    labels = config.get("labels")
    if need_labels and not labels:
        raise DataError("this command needs a 'labels' path in the config")
    return load_views(config["views"], labels)


def _parse_views(spec, n_views):
    if spec is None:
        return None
    try:
        views = sorted({int(tok) for tok in spec.split(",") if tok.strip()})
    except ValueError:
        raise DataError(f"bad --views value {spec!r}; expected e.g. '1,2'") from None
    if not views or views[0] < 1 or views[-1] > n_views:
        raise DataError(f"--views entries must be in 1..{n_views}")
    return [v - 1 for v in views]


def cmd_simulate(args):
    cfg = io.load_simulation_config(args.config)
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    out = args.output
    if not out:
        raise DataError("simulate needs --output")
    os.makedirs(out, exist_ok=True)
    ds, truth = simulate.sample_dataset(cfg)
    io.write_views_csv(ds, out)
    io.save_truth(truth, cfg, os.path.join(out, "truth.json"))
    corrs = [
        float(c_dl)
        for (d, l) in truth.cross_covariance
        for c_dl in np.atleast_1d(
            truth.class_strength[d] * truth.class_strength[l]
            / np.sqrt((1 + truth.class_strength[d] ** 2)
                      * (1 + truth.class_strength[l] ** 2))
        )
    ]
    print(
        f"wrote {ds.n} subjects ({cfg.n_labeled} labeled + "
        f"{cfg.n_unlabeled} unlabeled), views p={list(cfg.dims)}, "
        f"K={cfg.n_classes}, shared factors q={cfg.n_shared}"
    )
    print(f"class canonical correlations per pair: {np.round(corrs, 4).tolist()}")
    if cfg.n_shared:
        print(f"extra factor correlations: {list(cfg.extra_corrs)}")
    return 0


def cmd_fit(args):
    config = io.load_run_config(args.config)
    for key in ("rho", "epsilon"):
        if key not in config:
            raise DataError(f"fit needs '{key}' in the config")
    out = _out_dir(args, config)
    ds = _load_data(config, need_labels=True)
    model = pipeline.train(
        ds,
        alpha=config.get("alpha", 0.5),
        rho=config["rho"],
        epsilon=config["epsilon"],
        semi_supervised=config.get("semi_supervised", False),
        tol=config.get("tol", 1e-8),
        max_iter=config.get("max_iter", 1000),
    )
    path = os.path.join(out, "model.json")
    io.save_model(model, path)
    if not args.no_plots:
        plots.save_objective_trace(
            model.objective_trace, os.path.join(out, "objective_trace.png")
        )
    print(
        f"fit: converged={model.converged} iterations={model.iterations} "
        f"kkt={model.kkt_residual:.3e} "
        f"cardinality={[int(solver.support(b).size) for b in model.coefficients]}"
    )
    print(f"model written to {path}")
    return 0


def cmd_cv(args):
    config = io.load_run_config(args.config)
    out = _out_dir(args, config)
    ds = _load_data(config, need_labels=True)
    if not config.get("semi_supervised", False):
        from .dataset import complete_cases

        ds = complete_cases(ds)
    rho_grid = config.get("rho_grid")
    if rho_grid is None:
        rho_grid = [config["rho"]] if "rho" in config else [0.0, 0.25, 0.5, 0.75, 1.0]
    eps_grid = config.get("epsilon_grid")
    if eps_grid is None:
        eps_grid = (
            [config["epsilon"]]
            if "epsilon" in config
            else np.logspace(-4, 0, 20).tolist()
        )
    cv_cfg = select.CVConfig(
        n_folds=config.get("n_folds", 5),
        rho_grid=tuple(rho_grid),
        epsilon_grid=tuple(eps_grid),
        alpha=config.get("alpha", 0.5),
        seed=args.seed if args.seed is not None else config.get("seed", 0),
        tol=config.get("tol", 1e-8),
        max_iter=config.get("max_iter", 1000),
        n_jobs=args.threads,
    )
    cv = select.cross_validate(ds, cv_cfg)
    report, summary = io.write_cv_report(cv, out)
    if not args.no_plots:
        plots.save_cv_heatmap(cv, os.path.join(out, "cv_criterion.png"))
    print(f"selected rho={cv.best_rho:g} epsilon={cv.best_epsilon:g}")
    print(f"report written to {report}, summary to {summary}")
    return 0


def cmd_predict(args):
    config = io.load_run_config(args.config)
    out = _out_dir(args, config)
    model = io.load_model(args.model)
    ds = _load_data(config, need_labels=False)
    views = _parse_views(args.views, model.n_views)
    labels, disc = pipeline.predict_dataset(model, ds, views)
    path = os.path.join(out, "predictions.csv")
    io.write_predictions_csv(path, ds.subject_ids, labels, disc)
    print(f"predictions for {ds.n} subjects written to {path}")
    return 0


def cmd_evaluate(args):
    config = io.load_run_config(args.config)
    out = _out_dir(args, config)
    model = io.load_model(args.model)
    ds = _load_data(config, need_labels=True)
    from .dataset import subset

    labeled = ds.labels > 0
    subsets = [[d] for d in range(model.n_views)]
    subsets.append(list(range(model.n_views)))
    errors = {}
    for views in subsets:
        key = f"view_{views[0] + 1}" if len(views) == 1 else "joint"
        rows = labeled & ds.present[:, views].all(axis=1)
        if not rows.any():
            errors[key] = None
            continue
        part = subset(ds, rows)
        pred, _ = pipeline.predict_dataset(model, part, views)
        errors[key] = misclassification_rate(pred, part.labels)
    cardinality = [int(solver.support(b).size) for b in model.coefficients]
    metrics = {
        "misclassification": errors,
        "cardinality": cardinality,
        "total_cardinality": int(sum(cardinality)),
        "converged": model.converged,
    }
    if args.truth:
        truth = io.load_truth(args.truth)
        metrics["sum_correlation"] = simulate.sum_correlation(
            model.coefficients, truth
        )
        metrics["estimation_correlation"] = [
            simulate.estimation_correlation(model.coefficients[d], truth, d)
            for d in range(model.n_views)
        ]
        pr = [
            simulate.precision_recall(model.coefficients[d], truth.support[d])
            for d in range(model.n_views)
        ]
        metrics["precision"] = [p for p, _ in pr]
        metrics["recall"] = [r for _, r in pr]
    path = os.path.join(out, "metrics.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(metrics, fh)
        fh.write("\n")
    if not args.no_plots:
        shown = {k: v for k, v in errors.items() if v is not None}
        plots.save_metric_bars(shown, cardinality, os.path.join(out, "metrics.png"))
    print(json.dumps(metrics, indent=2))
    print(f"metrics written to {path}")
    return 0


def build_parser():
    parser = _Parser(prog="jaca", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, model=False, truth=False, views=False):
        p.add_argument("--config", required=True, help="JSON config path")
        p.add_argument("--output", help="output directory")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                       help="worker count for parallel sections")
        p.add_argument("--no-plots", action="store_true",
                       help="skip figure rendering")
        if model:
            p.add_argument("--model", required=True, help="model JSON path")
        if truth:
            p.add_argument("--truth", help="ground-truth JSON path")
        if views:
            p.add_argument("--views", help="1-based view subset, e.g. '1' or '1,2'")

    common(sub.add_parser("simulate", help="generate synthetic data"))
    common(sub.add_parser("fit", help="fit the model at fixed (rho, epsilon)"))
    common(sub.add_parser("cv", help="cross-validate (rho, epsilon)"))
    common(sub.add_parser("predict", help="predict labels with a saved model"),
           model=True, views=True)
    common(sub.add_parser("evaluate", help="score a saved model"),
           model=True, truth=True)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else USAGE_EXIT
    handlers = {
        "simulate": cmd_simulate,
        "fit": cmd_fit,
        "cv": cmd_cv,
        "predict": cmd_predict,
        "evaluate": cmd_evaluate,
    }
    try:
        return handlers[args.command](args)
    except (DataError, ValueError) as exc:
        print(f"jaca {args.command}: {exc}", file=sys.stderr)
        return DATA_EXIT
    except OSError as exc:
        print(f"jaca {args.command}: {exc}", file=sys.stderr)
        return IO_EXIT


if __name__ == "__main__":
    sys.exit(main())

"""High-level training and prediction flows.

Wires the standardize / score / augment / solve steps into a single train
call, carries everything a later prediction needs (coefficient blocks,
standardization transforms, training projections and labels), and provides
the per-replicate study used to score the method on generated data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import classify, select, simulate, solver
from .augment import build_augmented_ss
from .dataset import (
    MultiViewDataset,
    build_score_matrix,
    complete_cases,
    labeled_rows,
    missing_patterns,
    standardize,
)


@dataclass(frozen=True)
class TrainedModel:
    """Fitted coefficient blocks plus the state needed to predict later.

    training_scores[d] holds the projections of the labeled training
    subjects through view d (NaN rows where the view was absent), so
    classifiers for any view subset can be rebuilt without the raw data.
    """

    coefficients: list
    transforms: list
    alpha: float
    rho: float
    lambdas: np.ndarray
    n_classes: int
    feature_names: list
    training_scores: list
    training_labels: np.ndarray
    iterations: int
    converged: bool
    kkt_residual: float
    objective: float
    objective_trace: np.ndarray

    @property
    def n_views(self):
        return len(self.coefficients)


def train(ds, alpha, rho, epsilon=None, lambdas=None, semi_supervised=True,
          tol=1e-8, max_iter=1000, w_init=None):
    """Fit the joint model on a training dataset.

    With semi_supervised=False the data is first restricted to subjects with
    every view and a label. Penalties come either from lambdas directly or
    from epsilon times each view's critical penalty. Exactly one of epsilon
    and lambdas must be given.
    """
    if (epsilon is None) == (lambdas is None):
        raise ValueError("give exactly one of epsilon or lambdas")
    if not semi_supervised:
        ds = complete_cases(ds)
    ds_std, transforms = standardize(ds)
    lab = labeled_rows(ds_std)
    scores = build_score_matrix(ds_std.labels[lab], ds_std.n_classes)
    patterns = missing_patterns(ds_std)
    sys = build_augmented_ss(ds_std, scores, patterns, alpha)
    if epsilon is not None:
        if not 0.0 < epsilon <= 1.0:
            raise ValueError(f"epsilon must be in (0, 1], got {epsilon}")
        lambdas = epsilon * solver.lambda_max_from_system(sys)
    lambdas = np.asarray(lambdas, dtype=float)
    cfg = solver.SolverConfig(alpha, rho, lambdas, tol, max_iter, w_init)
    result = solver.fit(sys, cfg)

    training_scores = []
    for d in range(ds_std.n_views):
        block = np.full((lab.size, scores.scores.shape[1]), np.nan)
        have = ds_std.present[lab, d]
        block[have] = ds_std.views[d][lab[have]] @ result.coefficients[d]
        training_scores.append(block)
    return TrainedModel(
        result.coefficients,
        transforms,
        alpha,
        rho,
        lambdas,
        ds_std.n_classes,
        ds.feature_names,
        training_scores,
        ds_std.labels[lab],
        result.iterations,
        result.converged,
        result.kkt_residual,
        float(result.objective_trace[-1]),
        result.objective_trace,
    )


def classifier_for(model, views=None):
    """Discriminant classifier for a view subset, rebuilt from the stored
    training projections. Default: all views (concatenated prediction)."""
    if views is None:
        views = list(range(model.n_views))
    views = sorted(views)
    blocks = [model.training_scores[d] for d in views]
    usable = np.all([np.isfinite(b).all(axis=1) for b in blocks], axis=0)
    scores = np.hstack([b[usable] for b in blocks])
    labels = model.training_labels[usable]
    return classify.fit_classifier(
        scores, labels, which_views=tuple(views),
        coefficients=[model.coefficients[d] for d in views],
        transforms=model.transforms,
    )


def predict_dataset(model, ds, views=None):
    """Predict labels for a raw dataset; returns (labels, discriminants)."""
    if views is None:
        views = list(range(model.n_views))
    clf = classifier_for(model, views)
    scores = classify.project(ds, model.coefficients, model.transforms, views)
    disc = classify.discriminant_scores(clf, scores)
    return np.argmax(disc, axis=1) + 1, disc


def select_and_train(ds, cv_config, semi_supervised=True, tol=1e-8,
                     max_iter=1000):
    """Cross-validate (rho, epsilon) and refit on the full training data."""
    if not semi_supervised:
        ds = complete_cases(ds)
    cv = select.cross_validate(ds, cv_config)
    model = train(
        ds, cv_config.alpha, cv.best_rho, epsilon=cv.best_epsilon,
        semi_supervised=True, tol=tol, max_iter=max_iter,
    )
    return model, cv


def evaluate_replicate(cfg, cv_config, n_test=10_000, semi_supervised=False,
                       test_seed_offset=1_000_003):
    """One generation / selection / scoring round on synthetic data.

    Draws a training dataset and an independent test set from the same
    truth (same seed stream for the loadings, shifted sample stream), runs
    cross-validated selection, refits, and reports misclassification per
    view subset plus the population association metrics.
    """
    ds, truth = simulate.sample_dataset(cfg)
    # The test set shares the replicate's truth: only the subjects are new.
    test_ds = _resample_subjects(cfg, truth, n_test, cfg.seed + test_seed_offset)

    model, cv = select_and_train(ds, cv_config, semi_supervised=semi_supervised)
    errors = {}
    for d in range(model.n_views):
        pred, _ = predict_dataset(model, test_ds, [d])
        errors[f"view_{d + 1}"] = classify.misclassification_rate(
            pred, test_ds.labels
        )
    pred, _ = predict_dataset(model, test_ds)
    errors["joint"] = classify.misclassification_rate(pred, test_ds.labels)
    metrics = {
        "misclassification": errors,
        "sum_correlation": simulate.sum_correlation(model.coefficients, truth),
        "estimation_correlation": [
            simulate.estimation_correlation(model.coefficients[d], truth, d)
            for d in range(model.n_views)
        ],
        "precision_recall": [
            simulate.precision_recall(model.coefficients[d], truth.support[d])
            for d in range(model.n_views)
        ],
        "cardinality": [
            int(solver.support(b).size) for b in model.coefficients
        ],
        "best_rho": cv.best_rho,
        "best_epsilon": cv.best_epsilon,
        "converged": model.converged,
    }
    return metrics


def _resample_subjects(cfg, truth, n, seed):
    """Fresh subjects from an existing truth (loadings held fixed)."""
    rng = np.random.default_rng(seed)
    K = cfg.n_classes
    q = truth.extra_corrs.size
    y = rng.choice(np.arange(1, K + 1), size=n, p=truth.priors)
    U = truth.indicator_map[y - 1]
    shared = rng.standard_normal((n, q)) if q else None
    views = []
    for d, p in enumerate(cfg.dims):
        vals, vecs = np.linalg.eigh(truth.noise_covariance[d])
        root = vecs @ np.diag(np.sqrt(np.maximum(vals, 0.0))) @ vecs.T
        X = U @ truth.class_loadings[d].T
        if q:
            X = X + shared @ truth.shared_loadings[d].T
        X = X + rng.standard_normal((n, p)) @ root
        views.append(X)
    return MultiViewDataset(
        views,
        np.ones((n, cfg.n_views), dtype=bool),
        y,
        K,
        [f"t{i + 1}" for i in range(n)],
        [[f"x{j + 1}" for j in range(p)] for p in cfg.dims],
    )

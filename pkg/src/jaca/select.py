"""Cross-validated selection of the shrinkage and sparsity parameters.

The selection criterion averages, over folds, a scale-invariant correlation
between held-out quantities: the square root of the RV coefficient between
the held-out transformed response and each view's held-out projection,
plus the same measure between every pair of view projections. Penalties are
anchored at each training split's critical value, lambda_d = eps * lambda_max_d,
and the descent is warm-started along the eps path from the sparse end.
Folds are stratified by the exact missingness signature, so every fold sees
the same mix of observation patterns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed

from .augment import build_augmented_ss, split_blocks
from .dataset import (
    DataError,
    apply_transforms,
    build_score_matrix,
    labeled_rows,
    missing_patterns,
    standardize,
    subset,
)
from .solver import _lam_columns, lambda_max_from_system, solve_gram


@dataclass(frozen=True)
class CVConfig:
    """Grids and bookkeeping for cross-validation.

    epsilon values must lie in [1e-4, 1]; they are swept from largest to
    smallest so each fit warm-starts from the previous, sparser solution.
    """

    n_folds: int = 5
    rho_grid: tuple = (0.0, 0.25, 0.5, 0.75, 1.0)
    epsilon_grid: tuple = tuple(np.logspace(-4, 0, 20))
    alpha: float = 0.5
    seed: int = 0
    tol: float = 1e-8
    max_iter: int = 1000
    n_jobs: int = 1

    def validate(self):
        if self.n_folds < 2:
            raise ValueError("need at least 2 folds")
        if len(self.rho_grid) == 0 or len(self.epsilon_grid) == 0:
            raise ValueError("parameter grids must be nonempty")
        rhos = np.asarray(self.rho_grid, dtype=float)
        epss = np.asarray(self.epsilon_grid, dtype=float)
        if np.any((rhos < 0) | (rhos > 1)):
            raise ValueError("rho grid values must lie in [0, 1]")
        if np.any((epss < 1e-4) | (epss > 1)):
            raise ValueError("epsilon grid values must lie in [1e-4, 1]")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        return np.sort(rhos), np.sort(epss)[::-1]


@dataclass(frozen=True)
class CVResult:
    """Criterion surface and the selected parameter pair."""

    criterion: np.ndarray
    per_fold: np.ndarray
    rho_grid: np.ndarray
    epsilon_grid: np.ndarray
    best_rho: float
    best_epsilon: float
    fold_assignment: np.ndarray
    lambda_max_per_fold: np.ndarray


def rv_correlation(X, Y):
    """Square root of the RV coefficient between two column-centered matrices.

    Returns a value in [0, 1] invariant to positive scaling and to
    right-multiplication of either argument by an orthogonal matrix; equals
    the absolute Pearson correlation when both arguments are vectors.
    Returns 0 by convention when either matrix is entirely zero.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    if X.shape[0] == 1:
        X = X.T
    if Y.shape[0] == 1:
        Y = Y.T
    if X.shape[0] != Y.shape[0]:
        raise ValueError(f"row counts differ: {X.shape[0]} vs {Y.shape[0]}")
    if not X.any() or not Y.any():
        return 0.0
    num = ((X.T @ Y) ** 2).sum()
    den = np.sqrt(((X.T @ X) ** 2).sum()) * np.sqrt(((Y.T @ Y) ** 2).sum())
    return float(np.sqrt(min(1.0, num / den)))


def _center(M):
    return M - M.mean(axis=0)


def cv_criterion(heldout, coefficients, alpha, contrast):
    """Scale-invariant held-out criterion for one fitted model.

    heldout is a standardized dataset (training transforms already applied);
    contrast is the training contrast matrix used to form the held-out
    transformed response. Terms whose subjects are absent from the fold are
    skipped. All matrices are column-centered with held-out means before the
    correlation is taken.
    """
    pats = missing_patterns(heldout)
    n_views = heldout.n_views
    total = 0.0
    for d in range(n_views):
        rows = pats.classification[d]
        if rows.size == 0:
            continue
        resp = contrast[heldout.labels[rows] - 1]
        proj = heldout.views[d][rows] @ coefficients[d]
        total += alpha * rv_correlation(_center(resp), _center(proj))
    for (d, l), rows in pats.pairwise.items():
        if rows.size == 0:
            continue
        pd_ = _center(heldout.views[d][rows] @ coefficients[d])
        pl_ = _center(heldout.views[l][rows] @ coefficients[l])
        total += (1.0 - alpha) / (n_views - 1) * rv_correlation(pd_, pl_)
    return total


def stratified_folds(ds, patterns, n_folds, seed):
    """Assign subjects to folds, stratified by missingness signature.

    Subjects are grouped by which views and whether the label are present;
    each stratum is shuffled with the seeded generator and split into
    n_folds near-equal slices. Returns the fold index of every subject.
    """
    if n_folds < 2:
        raise ValueError("need at least 2 folds")
    signatures = {}
    for i in range(ds.n):
        sig = tuple(ds.present[i]) + (ds.labels[i] > 0,)
        signatures.setdefault(sig, []).append(i)
    rng = np.random.default_rng(seed)
    assignment = np.full(ds.n, -1, dtype=int)
    for sig in sorted(signatures):
        idx = np.asarray(signatures[sig])
        perm = idx[rng.permutation(idx.size)]
        for f, chunk in enumerate(np.array_split(perm, n_folds)):
            assignment[chunk] = f
    return assignment


def _path_surface(train, test, rhos, epss, alpha, tol, max_iter):
    """Criterion values over the (rho, eps) grid for one train/test split."""
    surface = np.full((rhos.size, epss.size), -np.inf)
    lam_max = np.zeros(train.n_views)
    try:
        train_std, transforms = standardize(train)
        test_std = apply_transforms(test, transforms)
        lab = labeled_rows(train_std)
        scores = build_score_matrix(train_std.labels[lab], train_std.n_classes)
        pats = missing_patterns(train_std)
        sys = build_augmented_ss(train_std, scores, pats, alpha)
        lam_max = lambda_max_from_system(sys)
    except (DataError, ValueError):
        return surface, lam_max
    gram = sys.design.T @ sys.design
    xty = sys.design.T @ sys.response
    ynorm2 = float((sys.response**2).sum())
    n_cols, m = xty.shape
    for ri, rho in enumerate(rhos):
        w = np.zeros((n_cols, m))
        for ei, eps in enumerate(epss):
            lam_col = _lam_columns(eps * lam_max, sys.column_index, n_cols)
            try:
                w, _, _, _, _ = solve_gram(
                    gram, xty, ynorm2, lam_col, rho, tol, max_iter, w
                )
                blocks = split_blocks(w, sys.dims)
                surface[ri, ei] = cv_criterion(
                    test_std, blocks, alpha, scores.contrast
                )
            except (DataError, ValueError):
                surface[ri, ei] = -np.inf
                w = np.zeros((n_cols, m))
    return surface, lam_max


def cross_validate(ds, cfg):
    """Select (rho, epsilon) by maximizing the held-out criterion.

    For every fold the penalties are re-anchored at that training split's
    lambda_max. Failed cells are marked -inf rather than skipped. Ties are
    broken toward the larger epsilon (sparser model), then the larger rho.
    """
    rhos, epss = cfg.validate()
    patterns = missing_patterns(ds)
    assignment = stratified_folds(ds, patterns, cfg.n_folds, cfg.seed)
    splits = [
        (subset(ds, assignment != f), subset(ds, assignment == f))
        for f in range(cfg.n_folds)
    ]
    if cfg.n_jobs == 1:
        results = [
            _path_surface(tr, te, rhos, epss, cfg.alpha, cfg.tol, cfg.max_iter)
            for tr, te in splits
        ]
    else:
        results = Parallel(n_jobs=cfg.n_jobs)(
            delayed(_path_surface)(
                tr, te, rhos, epss, cfg.alpha, cfg.tol, cfg.max_iter
            )
            for tr, te in splits
        )
    per_fold = np.stack([surface for surface, _ in results])
    lam_folds = np.stack([lam for _, lam in results])
    criterion = per_fold.mean(axis=0)
    if not np.isfinite(criterion).any():
        raise RuntimeError("every cross-validation cell failed")
    best = None
    for ri, rho in enumerate(rhos):
        for ei, eps in enumerate(epss):
            key = (criterion[ri, ei], eps, rho)
            if best is None or key > best:
                best = key
                best_pair = (float(rho), float(eps))
    return CVResult(
        criterion,
        per_fold,
        rhos,
        epss,
        best_pair[0],
        best_pair[1],
        assignment,
        lam_folds,
    )

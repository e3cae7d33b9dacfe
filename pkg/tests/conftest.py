"""Shared helpers: random small instances and independent oracles."""

import itertools

import numpy as np
from scipy.optimize import minimize

from jaca import (
    MultiViewDataset,
    build_augmented,
    build_score_matrix,
    standardize,
)
from jaca.solver import _lam_columns


def make_complete_dataset(rng, n, dims, n_classes, shift=1.0):
    """Complete two-or-more-view dataset with every class populated."""
    labels = np.asarray(
        [1 + i % n_classes for i in range(n_classes)]
        + list(rng.integers(1, n_classes + 1, size=n - n_classes))
    )
    labels = labels[rng.permutation(n)]
    views = [
        rng.standard_normal((n, p)) + shift * labels[:, None] for p in dims
    ]
    return MultiViewDataset(
        views,
        np.ones((n, len(dims)), dtype=bool),
        labels,
        n_classes,
        [f"s{i + 1}" for i in range(n)],
        [[f"x{j + 1}" for j in range(p)] for p in dims],
    )


def random_instance(rng, n=None, dims=None, n_classes=None, alpha=None):
    """Standardized complete dataset plus its stacked system."""
    if n_classes is None:
        n_classes = int(rng.integers(2, 4))
    if n is None:
        n = int(rng.integers(n_classes + 3, 11))
    if dims is None:
        dims = tuple(rng.integers(1, 4, size=2))
    if alpha is None:
        alpha = float(rng.uniform(0.3, 1.0))
    ds = make_complete_dataset(rng, n, dims, n_classes)
    ds_std, transforms = standardize(ds)
    scores = build_score_matrix(ds_std.labels, n_classes)
    system = build_augmented(ds_std, scores, alpha)
    return ds_std, scores, system, alpha


def direct_joint_loss(ds_std, scores, coefficients, alpha):
    """Unpenalized loss evaluated term by term from its definition."""
    n = ds_std.n
    D = ds_std.n_views
    Y = scores.scores
    total = 0.0
    for d in range(D):
        fitted = ds_std.views[d] @ coefficients[d]
        total += alpha / (2 * n * D) * ((Y - fitted) ** 2).sum()
    for d in range(D):
        for l in range(d + 1, D):
            diff = ds_std.views[d] @ coefficients[d] - ds_std.views[l] @ coefficients[l]
            total += (1 - alpha) / (2 * n * D * (D - 1)) * (diff**2).sum()
    return total


def direct_joint_loss_missing(ds_std, scores, patterns, coefficients, alpha):
    """Block-missing unpenalized loss evaluated subject by subject."""
    n = ds_std.n
    D = ds_std.n_views
    lab = np.flatnonzero(ds_std.labels > 0)
    score_of = {int(i): k for k, i in enumerate(lab)}
    total = 0.0
    for d in range(D):
        for i in patterns.classification[d]:
            resid = scores.scores[score_of[int(i)]] - ds_std.views[d][i] @ coefficients[d]
            total += alpha / (2 * n * D) * (resid**2).sum()
    for (d, l), rows in patterns.pairwise.items():
        for i in rows:
            diff = (
                ds_std.views[d][i] @ coefficients[d]
                - ds_std.views[l][i] @ coefficients[l]
            )
            total += (1 - alpha) / (2 * n * D * (D - 1)) * (diff**2).sum()
    return total


def group_penalty(coefficients, lam):
    return sum(
        lam[d] * np.sqrt((b**2).sum(axis=1)).sum()
        for d, b in enumerate(coefficients)
    )


def active_set_minimum(system, rho, lam):
    """Global minimum by exhaustive active-set enumeration.

    For every row subset the objective restricted to that support is smooth
    at its minimizer whenever the subset is the true support, so minimizing
    the restricted problems with a quasi-Newton solver and taking the best
    value recovers the global optimum. Only usable for a handful of rows.
    """
    X, Y = system.design, system.response
    gram = X.T @ X
    xty = X.T @ Y
    ynorm2 = float((Y**2).sum())
    n_rows, m = xty.shape
    lam_col = _lam_columns(np.asarray(lam, dtype=float), system.column_index, n_rows)
    best = 0.5 * ynorm2  # empty support
    for size in range(1, n_rows + 1):
        for subset_rows in itertools.combinations(range(n_rows), size):
            rows = list(subset_rows)
            H = (1 - rho) * gram[np.ix_(rows, rows)] + rho * np.eye(size)
            b_s = xty[rows]
            lam_s = lam_col[rows]

            def fun(v):
                W = v.reshape(size, m)
                HW = H @ W
                norms = np.sqrt((W**2).sum(axis=1))
                value = (
                    0.5 * ynorm2
                    - float((W * b_s).sum())
                    + 0.5 * float((W * HW).sum())
                    + float(lam_s @ norms)
                )
                grad = HW - b_s
                nz = norms > 0
                grad[nz] += (lam_s[nz] / norms[nz])[:, None] * W[nz]
                return value, grad.ravel()

            start = np.linalg.solve(H + 1e-12 * np.eye(size), b_s).ravel()
            res = minimize(
                fun,
                start,
                jac=True,
                method="L-BFGS-B",
                options={"maxiter": 2000, "ftol": 1e-16, "gtol": 1e-12},
            )
            best = min(best, float(res.fun))
    return best

"""Linear discriminant classification on projected view scores.

Subjects are projected through the fitted coefficient blocks (one score
block per requested view, concatenated in view order) and classified with a
pooled-covariance Gaussian discriminant rule. A small ridge keeps the pooled
covariance invertible when some projection directions collapse.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import DataError, apply_transforms


@dataclass(frozen=True)
class ProjectedClassifier:
    """Gaussian equal-covariance classifier in projection space."""

    which_views: tuple
    means: np.ndarray
    covariance: np.ndarray
    log_priors: np.ndarray
    coefficients: list | None = None
    transforms: list | None = None

    @property
    def n_classes(self):
        return self.means.shape[0]


def project(ds, coefficients, transforms, views):
    """Project the requested views of a raw dataset into score space.

    Each requested view is standardized with the stored training transforms
    and multiplied by its coefficient block; blocks are concatenated in view
    order. Every subject must have all requested views present.
    """
    views = sorted(views)
    if not views:
        raise ValueError("need at least one view")
    missing = ~ds.present[:, views].all(axis=1)
    if missing.any():
        names = [ds.subject_ids[i] for i in np.flatnonzero(missing)]
        raise DataError(
            f"views {[v + 1 for v in views]} absent for subjects: "
            + ", ".join(map(str, names[:10]))
            + ("..." if len(names) > 10 else "")
        )
    std = apply_transforms(ds, transforms)
    return np.hstack([std.views[d] @ coefficients[d] for d in views])


def fit_classifier(scores, labels, which_views=(), coefficients=None,
                   transforms=None):
    """Fit the discriminant rule on training scores.

    Class means are per-class score averages; the pooled within-class
    covariance uses the n - K denominator plus a ridge of 1e-8 * trace/q so
    rank-deficient projections stay invertible. Priors are the empirical
    class proportions.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if scores.ndim != 2 or scores.shape[0] != labels.shape[0]:
        raise ValueError("scores and labels must have matching rows")
    n, q = scores.shape
    if q < 1:
        raise ValueError("need at least one score dimension")
    n_classes = int(labels.max(initial=0))
    if n_classes < 1 or np.any(labels < 1):
        raise ValueError("labels must be positive class indices")
    counts = np.bincount(labels, minlength=n_classes + 1)[1:]
    if np.any(counts == 0):
        k = int(np.flatnonzero(counts == 0)[0]) + 1
        raise ValueError(f"class {k} has no samples")
    if n <= n_classes:
        raise ValueError(
            f"need more samples ({n}) than classes ({n_classes}) for the "
            "pooled covariance"
        )
    means = np.vstack(
        [scores[labels == k].mean(axis=0) for k in range(1, n_classes + 1)]
    )
    pooled = np.zeros((q, q))
    for k in range(1, n_classes + 1):
        centered = scores[labels == k] - means[k - 1]
        pooled += centered.T @ centered
    pooled /= n - n_classes
    trace = np.trace(pooled)
    ridge = 1e-8 * (trace / q if trace > 0 else 1.0)
    pooled += ridge * np.eye(q)
    log_priors = np.log(counts / n)
    return ProjectedClassifier(
        tuple(which_views), means, pooled, log_priors, coefficients, transforms
    )


def discriminant_scores(clf, scores):
    """Per-class linear discriminant values for each score row."""
    scores = np.asarray(scores, dtype=float)
    if scores.ndim != 2 or scores.shape[1] != clf.means.shape[1]:
        raise ValueError(
            f"score dimension {scores.shape} does not match classifier "
            f"({clf.means.shape[1]} features)"
        )
    sol = np.linalg.solve(clf.covariance, clf.means.T)
    linear = scores @ sol
    offset = -0.5 * np.sum(clf.means * sol.T, axis=1) + clf.log_priors
    return linear + offset


def predict(clf, scores):
    """Class labels (1-based) maximizing the discriminant; ties take the
    lowest class index."""
    return np.argmax(discriminant_scores(clf, scores), axis=1) + 1


def misclassification_rate(predicted, truth):
    """Fraction of disagreements between predicted and true labels."""
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if predicted.shape != truth.shape:
        raise ValueError(
            f"length mismatch: {predicted.shape} vs {truth.shape}"
        )
    return float(np.mean(predicted != truth))

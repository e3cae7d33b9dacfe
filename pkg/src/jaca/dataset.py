"""Multi-view data handling.

Aligns per-view CSV files into a single dataset with per-subject presence
flags, standardizes views to zero column means and unit ``n^{-1} X^T X``
diagonal, builds the transformed class response used by the optimal-scoring
classification loss, and computes the index sets describing which subjects
enter which loss term when views or labels are missing.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np


class DataError(ValueError):
    """Input data violates a format or value contract."""


@dataclass(frozen=True)
class MultiViewDataset:
    """D aligned measurement matrices on the same n subjects.

    views[d] has shape (n, p_d); rows where present[i, d] is False hold NaN
    placeholders. labels holds class indices in 1..n_classes, with 0 marking
    a missing label. n_classes is 0 only for fully unlabeled data.
    """

    views: list
    present: np.ndarray
    labels: np.ndarray
    n_classes: int
    subject_ids: list
    feature_names: list

    @property
    def n(self):
        return self.present.shape[0]

    @property
    def n_views(self):
        return self.present.shape[1]

    @property
    def dims(self):
        return [v.shape[1] for v in self.views]


@dataclass(frozen=True)
class StandardizationTransform:
    """Per-view column centering/scaling fit on training rows."""

    mean: np.ndarray
    scale: np.ndarray


@dataclass(frozen=True)
class ScoreMatrix:
    """Transformed class response for the labeled subjects.

    scores = Z @ contrast where Z is the 0/1 class-indicator matrix, so that
    scores.T @ scores = n_labeled * I and column sums are zero.
    """

    scores: np.ndarray
    contrast: np.ndarray
    class_counts: np.ndarray


@dataclass(frozen=True)
class MissingPatternSets:
    """Subjects entering each loss term.

    classification[d] holds the (sorted) row indices with both a label and
    view d; pairwise[(d, l)] for d < l holds the rows with both views.
    """

    classification: list
    pairwise: dict


def validate_dataset(ds):
    """Check the dataset invariants, raising DataError on violation."""
    n, n_views = ds.present.shape
    if n < 2:
        raise DataError(f"need at least 2 subjects, got {n}")
    if n_views < 2:
        raise DataError(f"need at least 2 views, got {n_views}")
    if len(ds.views) != n_views:
        raise DataError("present mask width does not match number of views")
    if len(ds.subject_ids) != n or ds.labels.shape != (n,):
        raise DataError("subject ids / labels length mismatch")
    for d, view in enumerate(ds.views):
        if view.shape[0] != n:
            raise DataError(f"view {d + 1} has {view.shape[0]} rows, expected {n}")
        finite = np.isfinite(view).all(axis=1)
        if not np.array_equal(finite, ds.present[:, d]):
            raise DataError(f"view {d + 1}: finite rows disagree with presence mask")
    labeled = ds.labels > 0
    if ds.n_classes == 0:
        if labeled.any():
            raise DataError("n_classes=0 requires all labels missing")
        return
    if ds.n_classes < 2:
        raise DataError(f"need at least 2 classes, got {ds.n_classes}")
    bad = labeled & ((ds.labels < 1) | (ds.labels > ds.n_classes))
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise DataError(
            f"label {ds.labels[i]} of subject {ds.subject_ids[i]!r} outside "
            f"1..{ds.n_classes}"
        )
    usable = labeled & ds.present.any(axis=1)
    for k in range(1, ds.n_classes + 1):
        if not np.any(usable & (ds.labels == k)):
            raise DataError(f"class {k} has no labeled subject with a present view")


def _read_view_csv(path):
    """Read one view file: id column plus numeric feature columns."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if "id" not in header:
            raise DataError(f"{path}: missing 'id' column")
        id_col = header.index("id")
        feat_cols = [j for j in range(len(header)) if j != id_col]
        feat_names = [header[j] for j in feat_cols]
        if not feat_names:
            raise DataError(f"{path}: no feature columns")
        rows = {}
        for r, rec in enumerate(reader, start=1):
            sid = rec[id_col].strip()
            if not sid:
                raise DataError(f"{path}: row {r}: empty id")
            if sid in rows:
                raise DataError(f"{path}: duplicate id {sid!r}")
            cells = [rec[j].strip() if j < len(rec) else "" for j in feat_cols]
            if all(c == "" for c in cells):
                rows[sid] = None
                continue
            values = np.empty(len(cells))
            for k, cell in enumerate(cells):
                try:
                    values[k] = float(cell)
                except ValueError:
                    raise DataError(
                        f"{path}: row {r}, column {feat_names[k]!r}: "
                        f"non-numeric value {cell!r}"
                    ) from None
                if not np.isfinite(values[k]):
                    raise DataError(
                        f"{path}: row {r}, column {feat_names[k]!r}: "
                        f"non-finite value {cell!r}"
                    )
            rows[sid] = values
    return feat_names, rows


def _read_labels_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        cols = [c.strip() for c in (reader.fieldnames or [])]
        if "id" not in cols or "label" not in cols:
            raise DataError(f"{path}: labels file needs 'id' and 'label' columns")
        labels = {}
        for r, rec in enumerate(reader, start=1):
            sid = (rec.get("id") or "").strip()
            if not sid:
                raise DataError(f"{path}: row {r}: empty id")
            if sid in labels:
                raise DataError(f"{path}: duplicate id {sid!r}")
            raw = (rec.get("label") or "").strip()
            if raw == "":
                continue
            try:
                value = float(raw)
            except ValueError:
                raise DataError(f"{path}: row {r}: non-numeric label {raw!r}") from None
            if value != int(value):
                raise DataError(f"{path}: row {r}: non-integer label {raw!r}")
            value = int(value)
            if value < 1:
                raise DataError(f"{path}: row {r}: label {value} below 1")
            labels[sid] = value
    return labels


def load_views(paths, labels_path=None):
    """Load and align view CSVs (and an optional labels CSV) by subject id.

    Subjects are the union of ids across the view files, ordered by id. A
    subject absent from a file, or with an all-empty row, has that view
    marked absent. Missing or empty label cells give a missing label.
    """
    if len(paths) < 2:
        raise DataError("need at least 2 view files")
    parsed = [_read_view_csv(p) for p in paths]
    ids = sorted(set().union(*(rows.keys() for _, rows in parsed)))
    n = len(ids)
    n_views = len(parsed)
    present = np.zeros((n, n_views), dtype=bool)
    views = []
    feature_names = []
    for d, (names, rows) in enumerate(parsed):
        mat = np.full((n, len(names)), np.nan)
        for i, sid in enumerate(ids):
            values = rows.get(sid)
            if values is not None:
                mat[i] = values
                present[i, d] = True
        views.append(mat)
        feature_names.append(names)

    labels = np.zeros(n, dtype=int)
    n_classes = 0
    if labels_path is not None:
        by_id = _read_labels_csv(labels_path)
        known = set(ids)
        for sid, value in by_id.items():
            if sid not in known:
                raise DataError(
                    f"{labels_path}: id {sid!r} not found in any view file"
                )
            labels[ids.index(sid)] = value
        if by_id:
            n_classes = max(by_id.values())

    ds = MultiViewDataset(views, present, labels, n_classes, ids, feature_names)
    validate_dataset(ds)
    return ds


def subset(ds, rows):
    """Row-subset of a dataset (rows is an index array or boolean mask)."""
    rows = np.asarray(rows)
    if rows.dtype == bool:
        rows = np.flatnonzero(rows)
    return MultiViewDataset(
        [v[rows] for v in ds.views],
        ds.present[rows],
        ds.labels[rows],
        ds.n_classes,
        [ds.subject_ids[i] for i in rows],
        ds.feature_names,
    )


def complete_cases(ds):
    """Subjects with every view present and a label."""
    keep = ds.present.all(axis=1) & (ds.labels > 0)
    return subset(ds, keep)


def labeled_rows(ds):
    """Row indices of the labeled subjects, in dataset order."""
    return np.flatnonzero(ds.labels > 0)


def standardize(ds):
    """Center and scale each view so the present training rows of view d have
    zero column means and unit diagonal of ``n^{-1} X_d^T X_d``.

    Statistics use only the rows where the view is present. Constant columns
    are centered to exactly zero and given scale 1 (they can never enter the
    model). Returns the transformed dataset and the per-view transforms for
    later application to test data.
    """
    transforms = []
    new_views = []
    for d, view in enumerate(ds.views):
        mask = ds.present[:, d]
        if mask.sum() < 2:
            raise DataError(
                f"view {d + 1}: fewer than 2 present rows, cannot standardize"
            )
        sub = view[mask]
        mean = sub.mean(axis=0)
        centered = sub - mean
        scale = np.sqrt(np.mean(centered**2, axis=0))
        constant = np.all(sub == sub[0], axis=0)
        scale[constant] = 1.0
        out = np.full_like(view, np.nan)
        std = centered / scale
        std[:, constant] = 0.0
        out[mask] = std
        new_views.append(out)
        transforms.append(StandardizationTransform(mean, scale))
    out_ds = MultiViewDataset(
        new_views, ds.present, ds.labels, ds.n_classes, ds.subject_ids,
        ds.feature_names,
    )
    return out_ds, transforms


def apply_transforms(ds, transforms):
    """Apply previously fit transforms (training means/scales, never refit)."""
    if len(transforms) != ds.n_views:
        raise DataError("number of transforms does not match number of views")
    new_views = []
    for d, view in enumerate(ds.views):
        tf = transforms[d]
        if view.shape[1] != tf.mean.shape[0]:
            raise DataError(f"view {d + 1}: transform dimension mismatch")
        out = np.full_like(view, np.nan)
        mask = ds.present[:, d]
        out[mask] = (view[mask] - tf.mean) / tf.scale
        new_views.append(out)
    return MultiViewDataset(
        new_views, ds.present, ds.labels, ds.n_classes, ds.subject_ids,
        ds.feature_names,
    )


def class_contrasts(weights):
    """Contrast matrix mapping class indicators to the transformed response.

    weights are per-class counts or prior probabilities (the result is
    invariant to their overall scale). Column l of the returned K x (K-1)
    matrix has the first l entries equal to sqrt(W * w_{l+1} / (s_l s_{l+1})),
    entry l+1 equal to -sqrt(W * s_l / (w_{l+1} s_{l+1})) and zeros below,
    with s_l the cumulative sum and W the total. These satisfy
    sum_k w_k C[k] = 0 and C^T diag(w) C = W * I.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.shape[0] < 2:
        raise ValueError("need at least two class weights")
    if np.any(w <= 0):
        raise ValueError("class weights must be positive")
    K = w.shape[0]
    total = w.sum()
    s = np.cumsum(w)
    C = np.zeros((K, K - 1))
    for l in range(1, K):
        C[:l, l - 1] = np.sqrt(total * w[l] / (s[l - 1] * s[l]))
        C[l, l - 1] = -np.sqrt(total * s[l - 1] / (w[l] * s[l]))
    return C


def build_score_matrix(labels, n_classes):
    """Transformed class response for the given labeled subjects.

    labels is a 1-D array of class indices in 1..n_classes (no missing
    entries); rows of the result follow the input order.
    """
    y = np.asarray(labels, dtype=int)
    if y.ndim != 1 or y.shape[0] == 0:
        raise DataError("labels must be a non-empty 1-D array")
    if n_classes < 2:
        raise DataError(f"need at least 2 classes, got {n_classes}")
    if np.any((y < 1) | (y > n_classes)):
        bad = int(y[(y < 1) | (y > n_classes)][0])
        raise DataError(f"label {bad} outside 1..{n_classes}")
    counts = np.bincount(y, minlength=n_classes + 1)[1:]
    for k in range(n_classes):
        if counts[k] == 0:
            raise DataError(f"class {k + 1} has no labeled subjects")
    contrast = class_contrasts(counts)
    scores = contrast[y - 1]
    return ScoreMatrix(scores, contrast, counts)


def missing_patterns(ds):
    """Index sets of subjects entering each loss term.

    With no missing data every set is 0..n-1. A subject enters the
    classification set of view d when both its label and view d are present,
    and the pairwise set (d, l) when both views are present regardless of
    the label.
    """
    labeled = ds.labels > 0
    classification = [
        np.flatnonzero(labeled & ds.present[:, d]) for d in range(ds.n_views)
    ]
    pairwise = {}
    for d in range(ds.n_views):
        for l in range(d + 1, ds.n_views):
            pairwise[(d, l)] = np.flatnonzero(ds.present[:, d] & ds.present[:, l])
    return MissingPatternSets(classification, pairwise)

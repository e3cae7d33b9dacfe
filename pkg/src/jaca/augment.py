"""Stacked regression system combining the classification and association losses.

The design matrix stacks D classification blocks (one per view, carrying the
transformed class response) followed by D(D-1)/2 pairwise contrast blocks
(one per view pair, with zero response), so that half the squared Frobenius
residual equals the weighted sum of both loss terms. Under block-missing
data each block keeps only the subjects for which its term is defined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import labeled_rows, missing_patterns


@dataclass(frozen=True)
class RowBlock:
    """Origin of one row range of the stacked design.

    kind is "class" (views holds a single view index) or "pair" (views holds
    the pair); rows are the dataset row indices the block was built from.
    """

    kind: str
    views: tuple
    rows: np.ndarray
    range: slice


@dataclass(frozen=True)
class AugmentedSystem:
    """Stacked design/response pair with block and column bookkeeping."""

    design: np.ndarray
    response: np.ndarray
    column_index: list
    block_index: list
    alpha: float
    n_subjects: int

    @property
    def n_views(self):
        return len(self.column_index)

    @property
    def dims(self):
        return [sl.stop - sl.start for sl in self.column_index]


def build_augmented_ss(ds, scores, patterns, alpha):
    """Stacked system for block-missing data.

    Classification block d keeps only subjects with both a label and view d;
    pairwise block (d, l) keeps subjects with both views. All blocks share
    the total training-subject count n in their scaling, so the result on
    complete data is identical to the complete-data construction.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must be in (0, 1], got {alpha}")
    n = ds.n
    n_views = ds.n_views
    dims = ds.dims
    m = scores.scores.shape[1]

    lab = labeled_rows(ds)
    # position of each dataset row within the score matrix
    score_row = np.full(n, -1, dtype=int)
    score_row[lab] = np.arange(lab.shape[0])

    col_index = []
    start = 0
    for p in dims:
        col_index.append(slice(start, start + p))
        start += p
    n_cols = start

    used = [False] * n_views
    blocks = []
    n_rows = 0
    for d in range(n_views):
        rows = np.asarray(patterns.classification[d], dtype=int)
        if rows.size:
            used[d] = True
        blocks.append(("class", (d,), rows))
        n_rows += rows.size
    for d in range(n_views):
        for l in range(d + 1, n_views):
            rows = np.asarray(patterns.pairwise[(d, l)], dtype=int)
            if rows.size:
                used[d] = used[l] = True
            blocks.append(("pair", (d, l), rows))
            n_rows += rows.size
    for d in range(n_views):
        if not used[d]:
            raise ValueError(
                f"view {d + 1} appears in no loss term (no labeled subjects "
                "with the view and no complete view pairs)"
            )

    design = np.zeros((n_rows, n_cols))
    response = np.zeros((n_rows, m))
    class_coef = math.sqrt(alpha / (n * n_views))
    pair_coef = math.sqrt((1.0 - alpha) / (n * n_views * (n_views - 1)))

    block_index = []
    at = 0
    for kind, views, rows in blocks:
        sl = slice(at, at + rows.size)
        if kind == "class":
            (d,) = views
            if np.any(score_row[rows] < 0):
                raise ValueError("classification block contains unlabeled subjects")
            design[sl, col_index[d]] = class_coef * ds.views[d][rows]
            response[sl] = class_coef * scores.scores[score_row[rows]]
        else:
            d, l = views
            design[sl, col_index[d]] = pair_coef * ds.views[d][rows]
            design[sl, col_index[l]] = -pair_coef * ds.views[l][rows]
        block_index.append(RowBlock(kind, views, rows, sl))
        at += rows.size
    return AugmentedSystem(design, response, col_index, block_index, alpha, n)


def build_augmented(ds, scores, alpha):
    """Stacked system for complete data (all views and labels present)."""
    if not np.all(ds.present):
        raise ValueError("complete-data construction requires all views present")
    if np.any(ds.labels <= 0):
        raise ValueError("complete-data construction requires all labels present")
    return build_augmented_ss(ds, scores, missing_patterns(ds), alpha)


def split_blocks(stacked, dims):
    """Split a stacked coefficient matrix into per-view blocks."""
    out = []
    at = 0
    for p in dims:
        out.append(stacked[at : at + p])
        at += p
    return out


def stack_blocks(blocks):
    """Concatenate per-view coefficient blocks into one matrix."""
    return np.vstack(blocks)

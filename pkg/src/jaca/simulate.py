"""Synthetic multi-view data from a latent factor model, plus the population
evaluation metrics.

Each view is generated as

    x_d = Delta_d * u_y + A_d * u + SigmaTilde_d^{1/2} * e_d

where u_y is a transformed class indicator (mean zero, identity covariance
under the class priors), u holds q class-independent factors shared across
views, and e_d is white noise. The class loadings are built from a row-sparse
matrix rotated and scaled so the induced between-view canonical correlations
due to class are exactly c_d c_l / sqrt((1+c_d^2)(1+c_l^2)); the shared-factor
loadings are orthogonalized against the class loadings so both structures
stay identifiable. The exact matrices are kept so estimates can be scored
against population covariances rather than samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import MultiViewDataset, class_contrasts, validate_dataset


@dataclass(frozen=True)
class SimulationConfig:
    """Generator settings for one synthetic dataset."""

    n_labeled: int
    n_unlabeled: int
    dims: tuple
    n_classes: int
    priors: tuple
    class_strength: tuple
    covariance: tuple
    nonzero_rows: int = 10
    extra_corrs: tuple = ()
    seed: int = 0

    @property
    def n_views(self):
        return len(self.dims)

    @property
    def n_shared(self):
        return len(self.extra_corrs)

    def validate(self):
        if self.n_labeled < 1:
            raise ValueError("need at least one labeled subject")
        if self.n_unlabeled < 0:
            raise ValueError("n_unlabeled must be nonnegative")
        if len(self.dims) < 2:
            raise ValueError("need at least 2 views")
        if self.n_classes < 2:
            raise ValueError("need at least 2 classes")
        priors = np.asarray(self.priors, dtype=float)
        if priors.shape != (self.n_classes,):
            raise ValueError(f"priors must have length {self.n_classes}")
        if np.any((priors <= 0) | (priors >= 1)) or abs(priors.sum() - 1) > 1e-12:
            raise ValueError("priors must lie in (0, 1) and sum to 1")
        if len(self.class_strength) != self.n_views:
            raise ValueError("class_strength must have one entry per view")
        if len(self.covariance) != self.n_views:
            raise ValueError("covariance must have one entry per view")
        if not 1 <= self.nonzero_rows <= min(self.dims):
            raise ValueError("nonzero_rows must be in 1..min(dims)")
        if self.nonzero_rows < self.n_classes - 1:
            raise ValueError(
                "nonzero_rows must be at least n_classes - 1 for full-rank "
                "class loadings"
            )
        corrs = np.asarray(self.extra_corrs, dtype=float)
        if corrs.size and np.any((corrs <= 0) | (corrs >= 1)):
            raise ValueError("extra_corrs must lie in (0, 1)")


@dataclass(frozen=True)
class SimulationTruth:
    """Exact population quantities behind a generated dataset."""

    class_loadings: list       # Delta_d = SigmaTilde_d @ B_d
    shared_loadings: list      # A_d, empty matrices when q = 0
    noise_covariance: list     # SigmaTilde_d
    discriminants: list        # B_d = SigmaTilde_d^{-1} Delta_d, row-sparse
    support: list              # nonzero rows of B_d
    marginal_covariance: list  # Sigma_d
    cross_covariance: dict     # Sigma_dl for d < l
    class_strength: list       # per-view diag targets, length K-1 each
    extra_corrs: np.ndarray
    priors: np.ndarray
    indicator_map: np.ndarray  # K x (K-1), row y-1 is the transformed indicator


def strength_for_correlation(rho):
    """Loading scale c giving canonical correlation rho between two views
    with equal class strength: rho = c^2/(1+c^2)."""
    rho = np.asarray(rho, dtype=float)
    if np.any((rho <= 0) | (rho >= 1)):
        raise ValueError("correlations must lie in (0, 1)")
    return np.sqrt(rho / (1.0 - rho))


def make_covariance(spec, p):
    """Noise covariance from a ("ar", phi) or ("identity",) description."""
    kind = spec[0]
    if kind == "identity":
        return np.eye(p)
    if kind == "ar":
        phi = float(spec[1])
        if not -1.0 < phi < 1.0:
            raise ValueError(f"autoregression parameter must be in (-1, 1), got {phi}")
        idx = np.arange(p)
        return phi ** np.abs(idx[:, None] - idx[None, :])
    raise ValueError(f"unknown covariance kind {kind!r}")


def _rotate_scale(M, sigma, targets):
    """Right-multiply M so that M^T sigma M = diag(targets**2).

    Uses the eigendecomposition of M^T sigma M; raises if it is rank
    deficient (the caller regenerates M in that case).
    """
    G = M.T @ sigma @ M
    vals, vecs = np.linalg.eigh(G)
    if vals[0] <= 1e-10 * vals[-1]:
        raise np.linalg.LinAlgError("rank-deficient loading Gram matrix")
    return M @ vecs @ np.diag(targets / np.sqrt(vals))


def generate_class_loadings(sigma_tilde, p, n_classes, s, strength, rng,
                            max_tries=50):
    """Row-sparse class loadings with exact canonical strength.

    Draws a p x (K-1) matrix with s uniformly chosen nonzero rows, entries
    uniform on [-2,-1] union [1,2], then rotates and scales it so
    B^T SigmaTilde B = diag(strength^2). Right-multiplication preserves the
    row support, so exactly s rows stay nonzero. Returns (B, Delta) with
    Delta = SigmaTilde @ B.
    """
    targets = np.broadcast_to(
        np.asarray(strength, dtype=float), (n_classes - 1,)
    ).copy()
    if np.any(targets <= 0):
        raise ValueError("class strength values must be positive")
    for _ in range(max_tries):
        rows = np.sort(rng.choice(p, size=s, replace=False))
        vals = rng.uniform(1.0, 2.0, size=(s, n_classes - 1))
        vals *= rng.choice([-1.0, 1.0], size=vals.shape)
        B = np.zeros((p, n_classes - 1))
        B[rows] = vals
        try:
            B = _rotate_scale(B, sigma_tilde, targets)
        except np.linalg.LinAlgError:
            continue
        return B, sigma_tilde @ B
    raise RuntimeError(
        f"could not draw rank-{n_classes - 1} class loadings in {max_tries} tries"
    )


def generate_shared_loadings(sigma_tilde, delta, extra_corrs, rng,
                             max_tries=50):
    """Loadings for class-independent factors shared across views.

    Standard normal columns are orthogonalized against the column space of
    the class loadings (so the two structures decouple), then rotated and
    scaled to hit the requested canonical correlations via
    c_k = sqrt(rho_k / (1 - rho_k)). Returns A = SigmaTilde @ M.
    """
    corrs = np.asarray(extra_corrs, dtype=float)
    q = corrs.size
    if q == 0:
        return np.zeros((sigma_tilde.shape[0], 0))
    p = sigma_tilde.shape[0]
    targets = strength_for_correlation(corrs)
    Q, _ = np.linalg.qr(delta)
    for _ in range(max_tries):
        M = rng.standard_normal((p, q))
        M -= Q @ (Q.T @ M)
        try:
            M = _rotate_scale(M, sigma_tilde, targets)
        except np.linalg.LinAlgError:
            continue
        return sigma_tilde @ M
    raise RuntimeError(f"could not draw rank-{q} shared loadings in {max_tries} tries")


def transformed_indicator(y, priors):
    """Transformed class indicator with mean zero and identity covariance
    under the priors."""
    priors = np.asarray(priors, dtype=float)
    if not 1 <= y <= priors.shape[0]:
        raise ValueError(f"class {y} outside 1..{priors.shape[0]}")
    return class_contrasts(priors)[y - 1]


def sample_dataset(cfg):
    """Draw one dataset from the factor model together with its truth.

    Class labels follow the priors for all n_labeled + n_unlabeled subjects;
    the trailing n_unlabeled subjects then have their label marked missing.
    Views are always fully observed.
    """
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    priors = np.asarray(cfg.priors, dtype=float)
    K = cfg.n_classes
    q = cfg.n_shared

    sigma_tilde = [
        make_covariance(spec, p) for spec, p in zip(cfg.covariance, cfg.dims)
    ]
    strengths = []
    discriminants = []
    class_loadings = []
    shared_loadings = []
    supports = []
    for d, p in enumerate(cfg.dims):
        strength = np.broadcast_to(
            np.asarray(cfg.class_strength[d], dtype=float), (K - 1,)
        ).copy()
        B, delta = generate_class_loadings(
            sigma_tilde[d], p, K, cfg.nonzero_rows, strength, rng
        )
        A = generate_shared_loadings(sigma_tilde[d], delta, cfg.extra_corrs, rng)
        strengths.append(strength)
        discriminants.append(B)
        class_loadings.append(delta)
        shared_loadings.append(A)
        supports.append(np.flatnonzero((B != 0).any(axis=1)))

    marginal = []
    for d in range(cfg.n_views):
        sigma = sigma_tilde[d] + class_loadings[d] @ class_loadings[d].T
        if q:
            sigma = sigma + shared_loadings[d] @ shared_loadings[d].T
        marginal.append(sigma)
    cross = {}
    for d in range(cfg.n_views):
        for l in range(d + 1, cfg.n_views):
            sigma_dl = class_loadings[d] @ class_loadings[l].T
            if q:
                sigma_dl = sigma_dl + shared_loadings[d] @ shared_loadings[l].T
            cross[(d, l)] = sigma_dl

    indicator_map = class_contrasts(priors)
    n = cfg.n_labeled + cfg.n_unlabeled
    y = rng.choice(np.arange(1, K + 1), size=n, p=priors)
    U = indicator_map[y - 1]
    shared = rng.standard_normal((n, q)) if q else None
    views = []
    for d, p in enumerate(cfg.dims):
        vals, vecs = np.linalg.eigh(sigma_tilde[d])
        root = vecs @ np.diag(np.sqrt(np.maximum(vals, 0.0))) @ vecs.T
        X = U @ class_loadings[d].T
        if q:
            X = X + shared @ shared_loadings[d].T
        X = X + rng.standard_normal((n, p)) @ root
        views.append(X)

    labels = y.copy()
    labels[cfg.n_labeled :] = 0
    ds = MultiViewDataset(
        views,
        np.ones((n, cfg.n_views), dtype=bool),
        labels,
        K,
        [f"s{i + 1}" for i in range(n)],
        [[f"x{j + 1}" for j in range(p)] for p in cfg.dims],
    )
    validate_dataset(ds)
    truth = SimulationTruth(
        class_loadings,
        shared_loadings,
        sigma_tilde,
        discriminants,
        supports,
        marginal,
        cross,
        strengths,
        np.asarray(cfg.extra_corrs, dtype=float),
        priors,
        indicator_map,
    )
    return ds, truth


def _weighted_correlation(left, mid_left, cross_mid, mid_right, right):
    """sqrt(||L^T C R||_F^2 / (||L^T S_L L||_F ||R^T S_R R||_F)) helper."""
    num = ((mid_left.T @ cross_mid @ mid_right) ** 2).sum()
    den = np.sqrt(((mid_left.T @ left @ mid_left) ** 2).sum())
    den *= np.sqrt(((mid_right.T @ right @ mid_right) ** 2).sum())
    if den == 0:
        return 0.0
    return float(np.sqrt(num / den))


def sum_correlation(coefficients, truth):
    """Total population correlation captured across all view pairs.

    Each pair contributes the square root of a trace ratio built from the
    population covariances; the value is invariant to positive scaling and
    orthogonal rotation of each block. Blocks that are entirely zero
    contribute 0 to every pair they appear in.
    """
    total = 0.0
    for (d, l), sigma_dl in truth.cross_covariance.items():
        wd, wl = coefficients[d], coefficients[l]
        if not wd.any() or not wl.any():
            continue
        total += _weighted_correlation(
            truth.marginal_covariance[d], wd, sigma_dl, wl,
            truth.marginal_covariance[l],
        )
    return total


def estimation_correlation(block, truth, d):
    """Similarity, in the noise-covariance metric, between an estimated block
    and the true discriminant directions of view d.

    Equals 1 exactly when the block matches the truth up to scaling and
    orthogonal rotation, and 0 when the two are orthogonal in that metric.
    """
    if not block.any():
        return 0.0
    sigma = truth.noise_covariance[d]
    return _weighted_correlation(sigma, block, sigma, truth.discriminants[d], sigma)


def precision_recall(block, true_support):
    """Row-selection precision and recall against the true support.

    An empty selection has precision 1 by convention (no false positives).
    """
    selected = set(np.flatnonzero((block != 0).any(axis=1)).tolist())
    true = set(np.asarray(true_support, dtype=int).tolist())
    hits = len(selected & true)
    precision = hits / len(selected) if selected else 1.0
    recall = hits / len(true) if true else 1.0
    return precision, recall

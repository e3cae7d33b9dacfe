"""Joint association and classification analysis for multi-view data.

Fits row-sparse per-view coefficient blocks that both discriminate between
classes (via an optimal-scoring response) and align the views (via pairwise
association terms), using a convex elastic-net group-lasso formulation
solved by block coordinate descent. Supports block-missing data: subjects
may lack views or class labels and still contribute to the terms their
observations define.
"""

from .augment import AugmentedSystem, build_augmented, build_augmented_ss
from .classify import (
    ProjectedClassifier,
    discriminant_scores,
    fit_classifier,
    misclassification_rate,
    predict,
    project,
)
from .dataset import (
    DataError,
    MissingPatternSets,
    MultiViewDataset,
    ScoreMatrix,
    StandardizationTransform,
    apply_transforms,
    build_score_matrix,
    class_contrasts,
    complete_cases,
    load_views,
    missing_patterns,
    standardize,
    subset,
)
from .pipeline import (
    TrainedModel,
    classifier_for,
    evaluate_replicate,
    predict_dataset,
    select_and_train,
    train,
)
from .select import (
    CVConfig,
    CVResult,
    cross_validate,
    cv_criterion,
    rv_correlation,
    stratified_folds,
)
from .simulate import (
    SimulationConfig,
    SimulationTruth,
    estimation_correlation,
    generate_class_loadings,
    generate_shared_loadings,
    precision_recall,
    sample_dataset,
    strength_for_correlation,
    sum_correlation,
    transformed_indicator,
)
from .solver import (
    FitResult,
    SolverConfig,
    cardinality,
    fit,
    kkt_residual,
    lambda_max,
    lambda_max_from_system,
    objective,
    soft_threshold,
    support,
)

__version__ = "0.1.0"

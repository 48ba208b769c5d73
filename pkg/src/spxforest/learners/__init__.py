"""Native classifier zoo with cross-validation, ranking and tuning."""

from .base import (
    N_FEATURES,
    ClassifierSpec,
    LearnerError,
    Standardizer,
    TrainedModel,
    TrainingTable,
)
from .selection import (
    DEFAULT_GRIDS,
    DEFAULT_HYPERPARAMETERS,
    ESTIMATORS,
    CVReport,
    cross_validate,
    default_grids,
    default_spec,
    fit,
    model_from_bytes,
    parse_dimension,
    parse_grids,
    predict,
    rank_models,
    stratified_folds,
    top_k,
    tune,
    tune_search,
)

ALGORITHMS = tuple(ESTIMATORS)

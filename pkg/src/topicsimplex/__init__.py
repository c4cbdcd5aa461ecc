"""Topic matrix estimation for pLSI via the eigen-ratio simplex of the SVD."""

from .core import (
    DocWeightMatrix,
    SingularBasis,
    TermDocMatrix,
    TopicMatrix,
    TopicModelError,
    validate_column_stochastic,
)
from .estimator import EstimatorConfig, estimate_topics, ideal_reconstruct, l1_error
from .spectral import SvdConfig, top_left_singular

__all__ = [
    "DocWeightMatrix",
    "EstimatorConfig",
    "SingularBasis",
    "SvdConfig",
    "TermDocMatrix",
    "TopicMatrix",
    "TopicModelError",
    "estimate_topics",
    "ideal_reconstruct",
    "l1_error",
    "top_left_singular",
    "validate_column_stochastic",
]

"""Numerical verification of Miao-Tam critical metrics on coordinate charts."""

from .charts import FAMILIES, ChartMetric, Model, ModelSpec, ScalarField, build_model
from .curvature import CurvatureBundle, compute_bundle
from .errors import (
    CritMetricError,
    NotFourDimensional,
    NumericalNonConvergence,
    PreconditionViolation,
    QuadratureNotConverged,
    StepUnderflow,
)

__version__ = "0.1.0"

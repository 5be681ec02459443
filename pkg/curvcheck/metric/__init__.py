from .corpus import CORPUS, UnknownMetricError, available, builtin
from .dsl import (
    DimensionMismatchError,
    InconsistentComponentError,
    MetricEvaluationError,
    MetricLoadError,
    MetricSpec,
    MetricSyntaxError,
    MissingDomainError,
    OutsideDomainError,
    UnknownIdentifierError,
    dump_metric,
    eval_metric,
    load_metric,
    parse_metric,
)

__all__ = [
    "CORPUS",
    "DimensionMismatchError",
    "InconsistentComponentError",
    "MetricEvaluationError",
    "MetricLoadError",
    "MetricSpec",
    "MetricSyntaxError",
    "MissingDomainError",
    "OutsideDomainError",
    "UnknownIdentifierError",
    "UnknownMetricError",
    "available",
    "builtin",
    "dump_metric",
    "eval_metric",
    "load_metric",
    "parse_metric",
]

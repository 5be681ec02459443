from .curvature import CurvaturePoint, SingularMetricError, riemann_at
from .k_tensors import ALL_KINDS, KindDimensionError, KKind, k_tensor
from .tensor import MetricAtPoint, TensorField, TensorValue, ValenceError

__all__ = [
    "ALL_KINDS",
    "CurvaturePoint",
    "KKind",
    "KindDimensionError",
    "MetricAtPoint",
    "SingularMetricError",
    "TensorField",
    "TensorValue",
    "ValenceError",
    "k_tensor",
    "riemann_at",
]

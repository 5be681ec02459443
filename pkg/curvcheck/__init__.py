"""Numerical verification of Riemann curvature identities on explicit metrics."""

from .checks.identities import IdentityId, build_identity, residual
from .checks.structures import classify
from .geometry.curvature import CurvaturePoint, riemann_at
from .geometry.k_tensors import ALL_KINDS, KKind, k_tensor
from .metric import CORPUS, MetricSpec, builtin, load_metric, parse_metric
from .report import Report, RunConfig, run_suite

__version__ = "0.1.0"

__all__ = [
    "ALL_KINDS",
    "CORPUS",
    "CurvaturePoint",
    "IdentityId",
    "KKind",
    "MetricSpec",
    "Report",
    "RunConfig",
    "build_identity",
    "builtin",
    "classify",
    "k_tensor",
    "load_metric",
    "parse_metric",
    "residual",
    "riemann_at",
    "run_suite",
]

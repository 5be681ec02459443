from functools import lru_cache
from pathlib import Path

import pytest

from curvcheck.geometry.curvature import CurvaturePoint, riemann_at
from curvcheck.metric import CORPUS, builtin, load_metric
from curvcheck.sampling import sample_points

FIXTURES = Path(__file__).parent / "fixtures"
SEED = 42


@lru_cache(maxsize=None)
def corpus_points(name: str, count: int = 3, seed: int = SEED) -> tuple[CurvaturePoint, ...]:
    spec = builtin(name)
    return tuple(riemann_at(spec, p) for p in sample_points(spec, count, seed))


@lru_cache(maxsize=None)
def generic_point() -> CurvaturePoint:
    return riemann_at(load_metric(FIXTURES / "generic.metric"), (1.0, 0.8, 1.2, 0.9))


@pytest.fixture(params=sorted(CORPUS))
def corpus_name(request) -> str:
    return request.param


@pytest.fixture
def fixtures() -> Path:
    return FIXTURES


@pytest.fixture
def sphere3() -> tuple[CurvaturePoint, ...]:
    return corpus_points("sphere_s3")


@pytest.fixture
def schwarzschild() -> tuple[CurvaturePoint, ...]:
    return corpus_points("schwarzschild")

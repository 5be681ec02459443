"""Central finite differences of metric components, independent of the jet code.

Components are evaluated with the plain float tree walker and differentiated with
fourth-order stencils.
"""

from typing import Callable, Sequence

from curvcheck.metric.dsl import MetricSpec, eval_float

STEP = 1e-4

Fn = Callable[[Sequence[float]], float]


def component(spec: MetricSpec, a: int, b: int) -> Fn:
    expr = spec.components[a][b]

    def f(point: Sequence[float]) -> float:
        env = dict(spec.params) | dict(zip(spec.coords, (float(x) for x in point)))
        return eval_float(expr, env)

    return f


def _shift(point: Sequence[float], i: int, delta: float) -> list[float]:
    p = list(point)
    p[i] += delta
    return p


def first(f: Fn, point: Sequence[float], i: int, h: float = STEP) -> float:
    ahead = -f(_shift(point, i, 2 * h)) + 8 * f(_shift(point, i, h))
    behind = -8 * f(_shift(point, i, -h)) + f(_shift(point, i, -2 * h))
    return (ahead + behind) / (12 * h)


def second(f: Fn, point: Sequence[float], i: int, h: float = STEP) -> float:
    return (
        -f(_shift(point, i, 2 * h))
        + 16 * f(_shift(point, i, h))
        - 30 * f(point)
        + 16 * f(_shift(point, i, -h))
        - f(_shift(point, i, -2 * h))
    ) / (12 * h * h)


def partial(f: Fn, point: Sequence[float], multi_index: Sequence[int], h: float = STEP) -> float:
    """∂^m f for a multi-index of total degree 1 or 2."""
    axes = [i for i, m in enumerate(multi_index) for _ in range(m)]
    if len(axes) == 1:
        return first(f, point, axes[0], h)
    if len(axes) == 2 and axes[0] == axes[1]:
        return second(f, point, axes[0], h)
    if len(axes) == 2:
        i, j = axes
        return first(lambda p: first(f, p, j, h), point, i, h)
    raise ValueError(f"oracle handles degrees 1 and 2, got {list(multi_index)}")

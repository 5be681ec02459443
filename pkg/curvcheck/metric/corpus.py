# Copyright (c) 2026 The curvcheck Authors. All rights reserved.

# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at

#     http://www.apache.org/licenses/LICENSE-2.0

# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

from functools import lru_cache

from .dsl import MetricSpec, parse_metric


class UnknownMetricError(ValueError):
    pass


CORPUS = {
    "flat_r4": """
        dim 4
        coords x y z w
        domain x -1 1
        domain y -1 1
        domain z -1 1
        domain w -1 1
        g 0 0 1
        g 1 1 1
        g 2 2 1
        g 3 3 1
    """,
    "flat_minkowski": """
        dim 4
        coords t x y z
        domain t -1 1
        domain x -1 1
        domain y -1 1
        domain z -1 1
        g 0 0 -1
        g 1 1 1
        g 2 2 1
        g 3 3 1
    """,
    "sphere_s2": """
        dim 2
        coords th ph
        domain th 0.4 2.7
        domain ph 0 6
        g 0 0 1
        g 1 1 sin(th)^2
    """,
    "sphere_s3": """
        dim 3
        coords ch th ph
        domain ch 0.4 2.7
        domain th 0.4 2.7
        domain ph 0 6
        g 0 0 1
        g 1 1 sin(ch)^2
        g 2 2 sin(ch)^2*sin(th)^2
    """,
    # upper half-plane
    "hyperbolic_h2": """
        dim 2
        coords x y
        domain x -1 1
        domain y 0.5 2
        g 0 0 1/y^2
        g 1 1 1/y^2
    """,
    "schwarzschild": """
        dim 4
        coords t r th ph
        param M 1.0
        domain t 0 1
        domain r 3 10
        domain th 0.5 2.6
        domain ph 0 3
        g 0 0 -(1-2*M/r)
        g 1 1 1/(1-2*M/r)
        g 2 2 r^2
        g 3 3 r^2*sin(th)^2
    """,
    # spatially flat dust, a(t) = t^(2/3)
    "flrw_dust": """
        dim 4
        coords t x y z
        domain t 1 2
        domain x -1 1
        domain y -1 1
        domain z -1 1
        g 0 0 -1
        g 1 1 t^(4/3)
        g 2 2 t^(4/3)
        g 3 3 t^(4/3)
    """,
    # Cahen-Wallach plane wave, locally symmetric
    "ppwave_sym": """
        dim 4
        coords u v x y
        domain u -1 1
        domain v -1 1
        domain x -1 1
        domain y -1 1
        g 0 0 x^2-y^2
        g 0 1 1
        g 2 2 1
        g 3 3 1
    """,
    # recurrent plane wave, grad R = du (x) R
    "ppwave_rec": """
        dim 4
        coords u v x y
        domain u -1 1
        domain v -1 1
        domain x -1 1
        domain y -1 1
        g 0 0 exp(u)*(x^2-y^2)
        g 0 1 1
        g 2 2 1
        g 3 3 1
    """,
    "product_s2xr": """
        dim 3
        coords th ph z
        domain th 0.4 2.7
        domain ph 0 6
        domain z -1 1
        g 0 0 1
        g 1 1 sin(th)^2
        g 2 2 1
    """,
}


def available() -> list[str]:
    return sorted(CORPUS)


@lru_cache(maxsize=None)
def builtin(name: str) -> MetricSpec:
    if name not in CORPUS:
        raise UnknownMetricError(f"unknown metric {name!r}; available: {', '.join(available())}")
    return parse_metric(CORPUS[name], name=name)

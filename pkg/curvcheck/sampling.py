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

"""Seeded sampling of points in a metric's coordinate box.

The generator is splitmix64 so a seed gives the same points on every platform.
"""

from dataclasses import dataclass

from .metric.dsl import MetricSpec

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15


@dataclass
class SplitMix64:
    state: int

    def __post_init__(self):
        self.state &= _MASK

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def next_float(self) -> float:
        """Uniform in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * 2.0**-53


def sample_points(spec: MetricSpec, count: int, seed: int) -> list[tuple[float, ...]]:
    """``count`` points drawn uniformly from the domain box, coordinates in declaration order."""
    if count < 1:
        raise ValueError(f"need at least one sample point, got {count}")
    rng = SplitMix64(seed)
    points = []
    for _ in range(count):
        points.append(tuple(lo + rng.next_float() * (hi - lo) for lo, hi in spec.domain))
    return points

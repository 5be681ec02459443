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

"""Levi-Civita connection and curvature at a point.

Conventions:

    R_abc^d = ∂_a Γ^d_bc − ∂_b Γ^d_ac − Γ^k_ac Γ^d_bk + Γ^d_ak Γ^k_bc
    R_ac    = R_abc^b

so the unit sphere has negative scalar curvature. Covariant-derivative slots are
prepended: ∇_f ∇_e R_abc^d is stored with slots (f, e, a, b, c, d).
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import torch
from einops import rearrange

from ..jets import MAX_ORDER, jet_einsum, jet_gradient, jet_inverse, jet_linear
from ..metric.dsl import MetricSpec, eval_metric
from .tensor import MetricAtPoint, TensorField, TensorValue, ValenceError, contract

logger = logging.getLogger(__name__)

DET_EPS = 1e-12
_SLOT_LETTERS = "abcdefghijklmnopqrstuvw"


class SingularMetricError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class MetricGeometry:
    point: tuple[float, ...]
    g: TensorField
    g_inv: TensorField
    gamma: TensorField

    @property
    def dim(self) -> int:
        return self.g.dim


@dataclass(frozen=True, eq=False)
class ConnectionJet:
    """Γ^d_bc with slots (d, b, c); ∂_e Γ^d_bc with slots (e, d, b, c); second partials (f, e, d, b, c)."""

    gamma: torch.Tensor
    d_gamma: torch.Tensor
    dd_gamma: torch.Tensor | None


def metric_geometry(spec: MetricSpec, point: Sequence[float], order: int = MAX_ORDER, strict: bool = True):
    g = eval_metric(spec, point, order, strict=strict)
    det = torch.linalg.det(g.constant)
    if det.abs() <= DET_EPS:
        raise SingularMetricError(f"metric {spec.name} is singular at {list(point)} (det = {det.item():.3e})")
    g_inv = jet_inverse(g)

    dg = jet_gradient(g)  # ∂_k g_ab
    lowered = jet_linear(
        lambda c: rearrange(c, "b k c n -> k b c n") + rearrange(c, "c k b n -> k b c n") - c,
        dg,
    )
    gamma = jet_einsum("dk,kbc->dbc", g_inv.truncate(order - 1), lowered) * 0.5
    return MetricGeometry(
        point=tuple(float(x) for x in point),
        g=TensorField(g, "dd"),
        g_inv=TensorField(g_inv, "uu"),
        gamma=TensorField(gamma, "udd"),
    )


def christoffel(spec: MetricSpec, point: Sequence[float]) -> ConnectionJet:
    return connection_jet(metric_geometry(spec, point).gamma)


def connection_jet(gamma: TensorField) -> ConnectionJet:
    d_gamma = jet_gradient(gamma.jets)
    dd_gamma = jet_gradient(d_gamma).constant.clone() if d_gamma.order >= 1 else None
    return ConnectionJet(gamma.jets.constant.clone(), d_gamma.constant.clone(), dd_gamma)


def riemann_field(geometry: MetricGeometry) -> TensorField:
    gamma = geometry.gamma.jets
    d_gamma = jet_gradient(gamma)  # slots (a, d, b, c)
    linear = jet_linear(
        lambda c: rearrange(c, "a d b c n -> a b c d n") - rearrange(c, "b d a c n -> a b c d n"),
        d_gamma,
    )
    gamma = gamma.truncate(d_gamma.order)
    quadratic = jet_einsum("dak,kbc->abcd", gamma, gamma) - jet_einsum("kac,dbk->abcd", gamma, gamma)
    return TensorField(linear + quadratic, "dddu")


def nabla(field: TensorField, gamma: TensorField) -> TensorField:
    """One covariant derivative of a jet field, new slot first, one order lower."""
    if field.order < 1:
        raise ValenceError("covariant derivative needs a field of jet order >= 1")
    order = field.order - 1
    if gamma.order < order:
        raise ValenceError(f"connection of order {gamma.order} cannot differentiate to order {order}")
    result = jet_gradient(field.jets)
    gamma_jets = gamma.jets.truncate(order)
    t = field.jets.truncate(order)
    slots = _SLOT_LETTERS[: len(field.valence)]
    for pos, variance in enumerate(field.valence):
        summed = slots[:pos] + "y" + slots[pos + 1 :]
        if variance == "d":
            result = result - jet_einsum(f"yz{slots[pos]},{summed}->z{slots}", gamma_jets, t)
        else:
            result = result + jet_einsum(f"{slots[pos]}zy,{summed}->z{slots}", gamma_jets, t)
    return TensorField(result, "d" + field.valence)


def covariant_derivative(field: TensorField, geometry: MetricGeometry, order: int = 1) -> TensorValue:
    if order not in (1, 2):
        raise ValueError(f"covariant derivatives of order 1 or 2 only, got {order}")
    for _ in range(order):
        field = nabla(field, geometry.gamma)
    return field.value()


@dataclass(frozen=True, eq=False)
class CurvaturePoint:
    point: tuple[float, ...]
    metric: MetricAtPoint
    connection: ConnectionJet
    riemann: TensorValue
    riemann_low: TensorValue
    ricci: TensorValue
    scalar: float
    nabla_riemann: TensorValue
    nabla2_riemann: TensorValue | None
    geometry: MetricGeometry
    riemann_jets: TensorField

    @property
    def dim(self) -> int:
        return self.metric.dim

    @cached_property
    def mixed_ricci(self) -> TensorValue:
        """R^a_b with slots (a, b)."""
        return TensorValue(torch.einsum("am,mb->ab", self.metric.g_inv.components, self.ricci.components), "ud")

    @cached_property
    def nabla_ricci(self) -> TensorValue:
        return contract(self.nabla_riemann, 2, 4)

    @cached_property
    def nabla_scalar(self) -> TensorValue:
        return TensorValue(
            torch.einsum("eac,ac->e", self.nabla_ricci.components, self.metric.g_inv.components), "d"
        )

    @cached_property
    def nabla2_riemann_low(self) -> torch.Tensor:
        assert self.nabla2_riemann is not None, "curvature evaluated without second derivatives"
        return torch.einsum("feabck,kd->feabcd", self.nabla2_riemann.components, self.metric.g.components)

    @cached_property
    def nabla2_ricci(self) -> TensorValue:
        """∇_f ∇_e R_ac with slots (f, e, a, c)."""
        assert self.nabla2_riemann is not None, "curvature evaluated without second derivatives"
        return contract(self.nabla2_riemann, 3, 5)


def riemann_at(
    spec: MetricSpec, point: Sequence[float], *, derivatives: int = 2, strict: bool = True
) -> CurvaturePoint:
    """All curvature data at ``point``, with ∇R and (when ``derivatives`` is 2) ∇∇R."""
    if derivatives not in (1, 2):
        raise ValueError(f"derivatives must be 1 or 2, got {derivatives}")
    geometry = metric_geometry(spec, point, order=derivatives + 2, strict=strict)
    riemann = riemann_field(geometry)
    nabla_r = nabla(riemann, geometry.gamma)
    nabla2_r = nabla(nabla_r, geometry.gamma).value() if derivatives == 2 else None

    g = geometry.g.value()
    g_inv = geometry.g_inv.value()
    metric = MetricAtPoint.from_components(g.components, g_inv.components)
    r = riemann.value()
    ricci = contract(r, 1, 3)
    scalar = float(torch.einsum("ac,ac->", ricci.components, g_inv.components))
    logger.debug("curvature of %s at %s: scalar %.6g", spec.name, list(point), scalar)
    return CurvaturePoint(
        point=geometry.point,
        metric=metric,
        connection=connection_jet(geometry.gamma),
        riemann=r,
        riemann_low=TensorValue(torch.einsum("abck,kd->abcd", r.components, g.components), "dddd"),
        ricci=ricci,
        scalar=scalar,
        nabla_riemann=nabla_r.value(),
        nabla2_riemann=nabla2_r,
        geometry=geometry,
        riemann_jets=riemann,
    )


def commutator_action(cp: CurvaturePoint, t: TensorValue) -> TensorValue:
    """[∇_a, ∇_b] t from curvature alone; the two new slots come first."""
    r = cp.riemann.components
    slots = _SLOT_LETTERS[2 : 2 + t.rank]
    result = torch.zeros((cp.dim,) * (t.rank + 2), dtype=r.dtype)
    for pos, variance in enumerate(t.valence):
        summed = slots[:pos] + "y" + slots[pos + 1 :]
        if variance == "d":
            result = result - torch.einsum(f"ab{slots[pos]}y,{summed}->ab{slots}", r, t.components)
        else:
            result = result + torch.einsum(f"aby{slots[pos]},{summed}->ab{slots}", r, t.components)
    return TensorValue(result, "dd" + t.valence)


def riemann_divergence(cp: CurvaturePoint) -> TensorValue:
    """∇_m R_abc^m."""
    return contract(cp.nabla_riemann, 0, 4)


def contracted_bianchi(cp: CurvaturePoint) -> TensorValue:
    """∇_b R_ac − ∇_a R_bc, slots (a, b, c)."""
    n = cp.nabla_ricci.components
    return TensorValue(rearrange(n, "b a c -> a b c") - n, "ddd")


def ricci_divergence_residual(cp: CurvaturePoint) -> float:
    """max |∇^a R_ab − ½ ∇_b R|."""
    div = torch.einsum("ea,eab->b", cp.metric.g_inv.components, cp.nabla_ricci.components)
    return float((div - 0.5 * cp.nabla_scalar.components).abs().max())

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

"""Curvature tensors built linearly from R, Ric, R and g.

Every kind is stored with the Riemann slot order K_bcd^e and has the shape

    K = ρ R + α (δ^e_b R_cd − δ^e_c R_bd) + β (R_b^e g_cd − R_c^e g_bd) + γ R (δ^e_b g_cd − δ^e_c g_bd)

so the divergence, the cyclic derivative sum B_abcd^e = ∇_a K_bcd^e + ∇_b K_cad^e + ∇_c K_abd^e
and its divergence all follow from (ρ, α, β, γ). The direct paths differentiate the
assembled K field as jets instead.
"""

import logging
from dataclasses import dataclass
from typing import Literal

import torch
from einops import rearrange

from ..jets import Jet, jet_einsum, jet_linear
from .curvature import CurvaturePoint, nabla, riemann_divergence
from .tensor import TensorField, TensorValue, contract, cyclic_sum

logger = logging.getLogger(__name__)

KindName = Literal["projective", "conformal", "concircular", "conharmonic", "quasi"]

_MIN_DIM = {"projective": 2, "conformal": 3, "concircular": 2, "conharmonic": 3, "quasi": 3}


class KindDimensionError(ValueError):
    pass


@dataclass(frozen=True)
class KCoefficients:
    rho: float
    alpha: float
    beta: float
    gamma: float


@dataclass(frozen=True)
class KKind:
    name: KindName
    a: float = 1.0
    b: float | None = None

    def __post_init__(self):
        if self.name not in _MIN_DIM:
            raise ValueError(f"unknown K tensor {self.name!r}; expected one of {', '.join(_MIN_DIM)}")
        if self.name == "quasi" and self.a == 0 and self.b == 0:
            raise ValueError("quasi-conformal constants a and b cannot both be zero")

    @classmethod
    def parse(cls, text: str) -> "KKind":
        """``projective``, ``conformal``, ``concircular``, ``conharmonic``, ``quasi`` or ``quasi:a:b``."""
        name, *rest = text.strip().lower().split(":")
        if name != "quasi":
            if rest:
                raise ValueError(f"only the quasi-conformal tensor takes constants, got {text!r}")
            return cls(name)
        if not rest:
            return cls("quasi")
        if len(rest) != 2:
            raise ValueError(f"expected quasi:a:b, got {text!r}")
        try:
            a, b = float(rest[0]), float(rest[1])
        except ValueError as e:
            raise ValueError(f"quasi-conformal constants must be numbers, got {text!r}") from e
        return cls("quasi", a, b)

    @property
    def label(self) -> str:
        if self.name == "quasi" and self.b is not None:
            return f"quasi:{self.a:g}:{self.b:g}"
        return self.name

    @property
    def min_dim(self) -> int:
        return _MIN_DIM[self.name]

    def check_dim(self, n: int):
        if n < self.min_dim:
            raise KindDimensionError(f"the {self.name} tensor needs dimension >= {self.min_dim}, got {n}")

    def quasi_constants(self, n: int) -> tuple[float, float]:
        self.check_dim(n)
        return self.a, (1.0 / (n - 2) if self.b is None else self.b)

    def coefficients(self, n: int) -> KCoefficients:
        self.check_dim(n)
        match self.name:
            case "projective":
                return KCoefficients(1.0, 1.0 / (n - 1), 0.0, 0.0)
            case "conformal":
                return KCoefficients(1.0, 1.0 / (n - 2), 1.0 / (n - 2), -1.0 / ((n - 1) * (n - 2)))
            case "concircular":
                return KCoefficients(1.0, 0.0, 0.0, 1.0 / (n * (n - 1)))
            case "conharmonic":
                return KCoefficients(1.0, 1.0 / (n - 2), 1.0 / (n - 2), 0.0)
        # W = a C̃ − b (n−2)(C − C̃)
        a, b = self.quasi_constants(n)
        return KCoefficients(a, -b, -b, (a + b * (n - 2)) / (n * (n - 1)) + b / (n - 1))


ALL_KINDS = tuple(KKind(name) for name in _MIN_DIM)


@dataclass(frozen=True)
class KDivergenceForm:
    """∇_m K_bcd^m = A ∇_m R_bcd^m + B (a_bd ∇_c φ − a_cd ∇_b φ) with φ = R."""

    A: float
    B: float
    codazzi: TensorValue
    phi_gradient: TensorValue

    def reconstruct(self, divergence_of_riemann: TensorValue) -> TensorValue:
        a, dphi = self.codazzi.components, self.phi_gradient.components
        source = torch.einsum("bd,c->bcd", a, dphi) - torch.einsum("cd,b->bcd", a, dphi)
        return TensorValue(self.A * divergence_of_riemann.components + self.B * source, "ddd")


def _divergence_constants(kind: KKind, n: int) -> tuple[float, float]:
    match kind.name:
        case "projective":
            return (n - 2) / (n - 1), 0.0
        case "conformal":
            return (n - 3) / (n - 2), (n - 3) / (2 * (n - 1) * (n - 2))
        case "concircular":
            return 1.0, 1.0 / (n * (n - 1))
        case "conharmonic":
            return (n - 3) / (n - 2), 1.0 / (2 * (n - 2))
    a, b = kind.quasi_constants(n)
    return a + b, (2 * a - b * (n - 1) * (n - 4)) / (2 * n * (n - 1))


def k_divergence_form(kind: KKind, n: int, cp: CurvaturePoint | None = None) -> KDivergenceForm:
    """The (A, B, φ, a) split of the divergence.

    With our curvature sign the Codazzi tensor comes out as −g. The scalar gradient is
    zero when no curvature point is given.
    """
    kind.check_dim(n)
    A, B = _divergence_constants(kind, n)
    if cp is None:
        g = torch.eye(n, dtype=torch.float64)
        dphi = torch.zeros(n, dtype=torch.float64)
    else:
        g, dphi = cp.metric.g.components, cp.nabla_scalar.components
    return KDivergenceForm(A, B, TensorValue(-g, "dd"), TensorValue(dphi, "d"))


def k_field(cp: CurvaturePoint, kind: KKind) -> TensorField:
    n = cp.dim
    c = kind.coefficients(n)
    riemann = cp.riemann_jets.jets
    order = riemann.order
    g = cp.geometry.g.jets.truncate(order)
    g_inv = cp.geometry.g_inv.jets.truncate(order)
    eye = torch.eye(n, dtype=riemann.coeffs.dtype)

    ricci = jet_linear(lambda t: torch.einsum("abcb...->ac...", t), riemann)
    mixed = jet_einsum("ek,kb->be", g_inv, ricci)
    scalar = jet_einsum("ac,ac->", g_inv, ricci)

    def wedge_delta(t: Jet) -> Jet:
        return jet_linear(
            lambda x: torch.einsum("eb,cd...->bcde...", eye, x) - torch.einsum("ec,bd...->bcde...", eye, x), t
        )

    k = riemann * c.rho
    if c.alpha:
        k = k + wedge_delta(ricci) * c.alpha
    if c.beta:
        k = k + (jet_einsum("be,cd->bcde", mixed, g) - jet_einsum("ce,bd->bcde", mixed, g)) * c.beta
    if c.gamma:
        k = k + scalar * wedge_delta(g) * c.gamma
    return TensorField(k, "dddu")


def k_tensor(cp: CurvaturePoint, kind: KKind) -> TensorValue:
    return k_field(cp, kind).value()


@dataclass(frozen=True, eq=False)
class KDerivatives:
    k: TensorValue
    nabla_k: TensorValue
    nabla2_k: TensorValue


def k_field_derivatives(cp: CurvaturePoint, kind: KKind) -> KDerivatives:
    """K, ∇K and ∇∇K by differentiating the jet field directly."""
    field = k_field(cp, kind)
    first = nabla(field, cp.geometry.gamma)
    second = nabla(first, cp.geometry.gamma)
    return KDerivatives(field.value(), first.value(), second.value())


def k_divergence(
    cp: CurvaturePoint, kind: KKind, mode: Literal["direct", "closed_form"] = "closed_form"
) -> TensorValue:
    """∇_m K_bcd^m with slots (b, c, d)."""
    if mode == "direct":
        return contract(nabla(k_field(cp, kind), cp.geometry.gamma).value(), 0, 4)
    if mode != "closed_form":
        raise ValueError(f"mode must be 'direct' or 'closed_form', got {mode!r}")
    c = kind.coefficients(cp.dim)
    g = cp.metric.g.components
    ds = cp.nabla_scalar.components
    # ∇_m R_b^m = ½ ∇_b R turns the Ricci wedge into a scalar-gradient term
    source = torch.einsum("b,cd->bcd", ds, g) - torch.einsum("c,bd->bcd", ds, g)
    div_r = riemann_divergence(cp).components
    return TensorValue((c.rho - c.alpha) * div_r + (0.5 * c.beta + c.gamma) * source, "ddd")


def _cyclic_delta_part(cp: CurvaturePoint) -> torch.Tensor:
    """δ^e_a ∇_p R_bcd^p + δ^e_b ∇_p R_cad^p + δ^e_c ∇_p R_abd^p."""
    eye = torch.eye(cp.dim, dtype=torch.float64)
    div_r = riemann_divergence(cp).components
    return (
        torch.einsum("ea,bcd->abcde", eye, div_r)
        + torch.einsum("eb,cad->abcde", eye, div_r)
        + torch.einsum("ec,abd->abcde", eye, div_r)
    )


def _cyclic_ricci_part(cp: CurvaturePoint) -> torch.Tensor:
    # The printed conharmonic line drops an index in its first bracket and repeats g_cd where
    # the cyclic pattern needs g_bd; this is the completed form shared with the Weyl tensor.
    g = cp.metric.g.components
    nm = torch.einsum("abk,ke->abe", cp.nabla_ricci.components, cp.metric.g_inv.components)  # ∇_a R_b^e
    return (
        torch.einsum("cd,abe->abcde", g, nm - rearrange(nm, "b a e -> a b e"))
        + torch.einsum("ad,bce->abcde", g, nm - rearrange(nm, "c b e -> b c e"))
        + torch.einsum("bd,cae->abcde", g, nm - rearrange(nm, "a c e -> c a e"))
    )


def _cyclic_scalar_part(cp: CurvaturePoint) -> torch.Tensor:
    eye = torch.eye(cp.dim, dtype=torch.float64)
    g = cp.metric.g.components
    ds = cp.nabla_scalar.components
    return (
        torch.einsum("ea,c,bd->abcde", eye, ds, g)
        - torch.einsum("ea,b,cd->abcde", eye, ds, g)
        + torch.einsum("eb,a,cd->abcde", eye, ds, g)
        - torch.einsum("eb,c,ad->abcde", eye, ds, g)
        + torch.einsum("ec,b,ad->abcde", eye, ds, g)
        - torch.einsum("ec,a,bd->abcde", eye, ds, g)
    )


@dataclass(frozen=True, eq=False)
class BianchiSource:
    """B_abcd^e computed from ∇K directly and from the closed form in Ricci and scalar gradients."""

    direct: TensorValue
    closed_form: TensorValue

    @property
    def discrepancy(self) -> float:
        diff = (self.direct - self.closed_form).max_abs()
        return diff / max(1.0, self.direct.max_abs(), self.closed_form.max_abs())


def k_bianchi_B(cp: CurvaturePoint, kind: KKind) -> BianchiSource:
    c = kind.coefficients(cp.dim)
    nabla_k = nabla(k_field(cp, kind), cp.geometry.gamma).value()
    direct = cyclic_sum(nabla_k, [0, 1, 2])
    closed = (
        c.alpha * _cyclic_delta_part(cp) + c.beta * _cyclic_ricci_part(cp) + c.gamma * _cyclic_scalar_part(cp)
    )
    source = BianchiSource(direct, TensorValue(closed, "ddddu"))
    logger.debug("B tensor of %s: discrepancy %.3e", kind.label, source.discrepancy)
    return source


def cyclic_divergence_sum(cp: CurvaturePoint) -> TensorValue:
    """∇_a ∇_p R_bcd^p + ∇_b ∇_p R_cad^p + ∇_c ∇_p R_abd^p."""
    assert cp.nabla2_riemann is not None, "curvature evaluated without second derivatives"
    d2 = contract(cp.nabla2_riemann, 1, 5).components
    total = d2 + rearrange(d2, "b c a d -> a b c d") + rearrange(d2, "c a b d -> a b c d")
    return TensorValue(total, "dddd")


def k_div_B(
    cp: CurvaturePoint, kind: KKind, mode: Literal["direct", "closed_form"] = "closed_form"
) -> TensorValue:
    """∇_m B_abcd^m with slots (a, b, c, d).

    Only the δ∧Ric part of K survives: the Ricci wedge and the scalar part are
    divergence free once cycled.
    """
    if mode == "direct":
        second = k_field_derivatives(cp, kind).nabla2_k
        return contract(cyclic_sum(second, [1, 2, 3]), 0, 5)
    if mode != "closed_form":
        raise ValueError(f"mode must be 'direct' or 'closed_form', got {mode!r}")
    alpha = kind.coefficients(cp.dim).alpha
    if alpha == 0:
        return TensorValue(torch.zeros((cp.dim,) * 4, dtype=torch.float64), "dddd")
    return alpha * cyclic_divergence_sum(cp)

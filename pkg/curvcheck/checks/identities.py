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

"""Curvature identities as signed sums of terms.

Each identity is written as ``sum(sign * term) == 0``: terms of the left-hand side
carry their printed sign and right-hand side terms are negated. Slot orders follow
the tensor being checked, e.g. the second-order identity is indexed (a, b, c, d, e, f).
"""

import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Literal

import torch
from einops import rearrange

from ..geometry.curvature import CurvaturePoint
from ..geometry.k_tensors import KKind, k_divergence_form, k_field_derivatives
from ..geometry.tensor import TensorValue, contract

logger = logging.getLogger(__name__)

RICCI_FLAT_TOL = 1e-8
DEGENERATE_TOL = 1e-10


class IdentityId(str, Enum):
    VEBLEN = "Veblen1"
    WALKER = "Walker2"
    LICHNEROWICZ = "Lichnerowicz3"
    SECOND_ORDER = "Main4"
    RICCI_ANTISYMMETRIC = "CorollaryU"
    LOVELOCK = "Lovelock6"
    K_LOVELOCK = "KLovelock7"
    DIVERGENCE_VEBLEN = "DivVeblen8"
    DOUBLE_DIVERGENCE = "DivDiv9"
    LOCALLY_SYMMETRIC_RRR = "AlgRRR10"
    LOCALLY_SYMMETRIC_RR = "AlgRR11"
    LOCALLY_SYMMETRIC_RRRR = "AlgRRRR12"
    TACHIBANA = "Tachibana"
    RICCI_PSEUDO = "RicciPseudo"


class MutationError(ValueError):
    pass


@dataclass(frozen=True)
class Term:
    name: str
    sign: float
    value: torch.Tensor


@dataclass(frozen=True)
class Residual:
    id: str
    max_abs: float
    scale: float
    relative: float
    worst_index: tuple[int, ...] | None
    applicable: bool = True

    @classmethod
    def not_applicable(cls, id: str) -> "Residual":
        return cls(id, 0.0, 0.0, 0.0, None, applicable=False)


@dataclass(frozen=True, eq=False)
class Identity:
    id: str
    terms: tuple[Term, ...]
    applicable: bool = True

    def total(self) -> torch.Tensor:
        return sum(t.sign * t.value for t in self.terms)

    def residual(self) -> Residual:
        if not self.applicable:
            return Residual.not_applicable(self.id)
        total = self.total()
        if not self.terms or total.numel() == 0:
            return Residual(self.id, 0.0, 0.0, 0.0, None)
        max_abs = float(total.abs().max())
        scale = max(float(t.value.abs().max()) for t in self.terms)
        worst = tuple(int(i) for i in torch.unravel_index(total.abs().argmax(), total.shape))
        return Residual(self.id, max_abs, scale, max_abs / max(1.0, scale), worst)


def _identity(id: IdentityId, lhs: list[tuple[str, float, torch.Tensor]], rhs=(), applicable: bool = True):
    terms = [Term(name, sign, value) for name, sign, value in lhs]
    terms += [Term(name, -sign, value) for name, sign, value in rhs]
    return Identity(id.value, tuple(terms), applicable)


def _cyclic4(t: torch.Tensor) -> list[torch.Tensor]:
    """The four rotations of the leading slots (a, b, c, d) of ``t``."""
    rest = " ".join(f"r{i}" for i in range(t.ndim - 4))
    return [
        t,
        rearrange(t, f"b c d a {rest} -> a b c d {rest}"),
        rearrange(t, f"c d a b {rest} -> a b c d {rest}"),
        rearrange(t, f"d a b c {rest} -> a b c d {rest}"),
    ]


def _cyclic3(t: torch.Tensor) -> list[torch.Tensor]:
    """The three rotations of the leading slots (a, b, c) of a rank-4 tensor indexed (a, b, c, e)."""
    return [t, rearrange(t, "b c a e -> a b c e"), rearrange(t, "c a b e -> a b c e")]


def _need_second(cp: CurvaturePoint):
    assert cp.nabla2_riemann is not None, "identity needs second covariant derivatives of the curvature"


def veblen(cp: CurvaturePoint) -> Identity:
    n1 = cp.nabla_riemann.components
    return _identity(
        IdentityId.VEBLEN,
        [
            ("∇_a R_bcd^e", 1.0, n1),
            ("∇_b R_adc^e", -1.0, rearrange(n1, "b a d c e -> a b c d e")),
            ("∇_c R_adb^e", 1.0, rearrange(n1, "c a d b e -> a b c d e")),
            ("∇_d R_bca^e", -1.0, rearrange(n1, "d b c a e -> a b c d e")),
        ],
    )


def walker(cp: CurvaturePoint) -> Identity:
    _need_second(cp)
    n2 = cp.nabla2_riemann_low
    return _identity(
        IdentityId.WALKER,
        [
            ("∇_a∇_b R_cdef", 1.0, n2),
            ("∇_b∇_a R_cdef", -1.0, rearrange(n2, "b a c d e f -> a b c d e f")),
            ("∇_c∇_d R_abef", 1.0, rearrange(n2, "c d a b e f -> a b c d e f")),
            ("∇_d∇_c R_abef", -1.0, rearrange(n2, "d c a b e f -> a b c d e f")),
            ("∇_e∇_f R_abcd", 1.0, rearrange(n2, "e f a b c d -> a b c d e f")),
            ("∇_f∇_e R_abcd", -1.0, rearrange(n2, "f e a b c d -> a b c d e f")),
        ],
    )


def lichnerowicz(cp: CurvaturePoint) -> Identity:
    """The wave equation for the curvature of a Ricci-flat metric; not applicable otherwise."""
    _need_second(cp)
    g_inv = cp.metric.g_inv.components
    rl = cp.riemann_low.components
    box = torch.einsum("fe,feabcd->abcd", g_inv, cp.nabla2_riemann_low)
    r_up = torch.einsum("abxy,xe,yf->abef", rl, g_inv, g_inv)
    quadratic = torch.einsum("abef,efcd->abcd", r_up, rl)
    cross = torch.einsum("xacy,xe,yf,ebdf->abcd", rl, g_inv, g_inv, rl)
    cross_swapped = torch.einsum("xady,xe,yf,ebcf->abcd", rl, g_inv, g_inv, rl)
    ricci_flat = cp.ricci.max_abs() <= RICCI_FLAT_TOL
    return _identity(
        IdentityId.LICHNEROWICZ,
        [
            ("∇^e∇_e R_abcd", 1.0, box),
            ("R_ab^ef R_efcd", -1.0, quadratic),
            ("R^e_ac^f R_ebdf", -2.0, cross),
            ("R^e_ad^f R_ebcf", 2.0, cross_swapped),
        ],
        applicable=ricci_flat,
    )


def _second_order_rhs(r: torch.Tensor) -> list[tuple[str, float, torch.Tensor]]:
    cyclic = _cyclic4(torch.einsum("abcm,dmef->abcdef", r, r))
    return [(f"R_(abc^m R_d)me^f [{i}]", 1.0, t) for i, t in enumerate(cyclic)] + [
        ("R_ace^m R_bdm^f", -1.0, torch.einsum("acem,bdmf->abcdef", r, r)),
        ("R_acm^f R_bde^m", 1.0, torch.einsum("acmf,bdem->abcdef", r, r)),
    ]


def second_order(cp: CurvaturePoint) -> Identity:
    """∇_(a ∇_b R_cd)e^f against its quadratic curvature terms."""
    _need_second(cp)
    lhs = [(f"∇_(a∇_b R_cd)e^f [{i}]", 1.0, t) for i, t in enumerate(_cyclic4(cp.nabla2_riemann.components))]
    return _identity(IdentityId.SECOND_ORDER, lhs, _second_order_rhs(cp.riemann.components))


def ricci_antisymmetric(cp: CurvaturePoint) -> Identity:
    """The U_ab = R_ab − R_ba corollary; identically 0 = 0 for a metric connection."""
    _need_second(cp)
    nr2 = cp.nabla2_ricci.components
    u = cp.ricci.components - cp.ricci.components.T
    ddu = nr2 - rearrange(nr2, "a b d c -> a b c d")
    rhs = _cyclic4(torch.einsum("abcm,dm->abcd", cp.riemann.components, u))
    return _identity(
        IdentityId.RICCI_ANTISYMMETRIC,
        [(f"∇_(a∇_b U_cd) [{i}]", 1.0, t) for i, t in enumerate(_cyclic4(ddu))],
        [(f"R_(abc^m U_d)m [{i}]", 1.0, t) for i, t in enumerate(rhs)],
    )


def _divergence2(cp: CurvaturePoint) -> torch.Tensor:
    """∇_a ∇_m R_bce^m indexed (a, b, c, e)."""
    _need_second(cp)
    return contract(cp.nabla2_riemann, 1, 5).components


def _ricci_riemann(cp: CurvaturePoint) -> torch.Tensor:
    """R_am R_bce^m indexed (a, b, c, e)."""
    return torch.einsum("am,bcem->abce", cp.ricci.components, cp.riemann.components)


def _lovelock_rhs(cp: CurvaturePoint, scale: float = 1.0) -> list[tuple[str, float, torch.Tensor]]:
    return [(f"R_am R_bce^m [{i}]", scale, t) for i, t in enumerate(_cyclic3(_ricci_riemann(cp)))]


def lovelock(cp: CurvaturePoint) -> Identity:
    lhs = [(f"∇_a∇_m R_bce^m [{i}]", 1.0, t) for i, t in enumerate(_cyclic3(_divergence2(cp)))]
    return _identity(IdentityId.LOVELOCK, lhs, _lovelock_rhs(cp))


def k_lovelock(cp: CurvaturePoint, kind: KKind) -> Identity:
    """Lovelock's identity for a K tensor, scaled by the A of its divergence split."""
    _need_second(cp)
    form = k_divergence_form(kind, cp.dim)
    div2 = contract(k_field_derivatives(cp, kind).nabla2_k, 1, 5).components
    lhs = [(f"∇_a∇_m K_bce^m [{i}]", 1.0, t) for i, t in enumerate(_cyclic3(div2))]
    return _identity(IdentityId.K_LOVELOCK, lhs, _lovelock_rhs(cp, form.A))


def _veblen_pattern(t: torch.Tensor, name: str) -> list[tuple[str, float, torch.Tensor]]:
    return [
        (f"{name} [abec]", 1.0, rearrange(t, "a b e c -> a b c e")),
        (f"{name} [bace]", -1.0, rearrange(t, "b a c e -> a b c e")),
        (f"{name} [ceba]", 1.0, rearrange(t, "c e b a -> a b c e")),
        (f"{name} [ecab]", -1.0, rearrange(t, "e c a b -> a b c e")),
    ]


def divergence_veblen(cp: CurvaturePoint) -> Identity:
    return _identity(
        IdentityId.DIVERGENCE_VEBLEN,
        _veblen_pattern(_divergence2(cp), "∇_a∇_m R_bce^m"),
        _veblen_pattern(_ricci_riemann(cp), "R_am R_bce^m"),
    )


def double_divergence(cp: CurvaturePoint) -> Identity:
    """∇_m ∇_n R_ab^mn = ∇^c ∇_b R_ac − ∇^c ∇_a R_bc, kept as its two Ricci terms."""
    _need_second(cp)
    g_inv = cp.metric.g_inv.components
    nr2 = cp.nabla2_ricci.components
    return _identity(
        IdentityId.DOUBLE_DIVERGENCE,
        [
            ("∇^c∇_b R_ac", 1.0, torch.einsum("fc,fbac->ab", g_inv, nr2)),
            ("∇^c∇_a R_bc", -1.0, torch.einsum("fc,fabc->ab", g_inv, nr2)),
        ],
    )


def algebraic_rrr(cp: CurvaturePoint) -> Identity:
    return _identity(IdentityId.LOCALLY_SYMMETRIC_RRR, _second_order_rhs(cp.riemann.components))


def algebraic_rr(cp: CurvaturePoint) -> Identity:
    return _identity(IdentityId.LOCALLY_SYMMETRIC_RR, _lovelock_rhs(cp))


def algebraic_rrrr(cp: CurvaturePoint) -> Identity:
    return _identity(IdentityId.LOCALLY_SYMMETRIC_RRRR, _veblen_pattern(_ricci_riemann(cp), "R_am R_bce^m"))


def tachibana(cp: CurvaturePoint) -> TensorValue:
    """Q(g, R)_cdefab."""
    g = cp.metric.g.components
    rl = cp.riemann_low.components
    q = (
        -torch.einsum("cb,adef->cdefab", g, rl)
        + torch.einsum("ca,bdef->cdefab", g, rl)
        - torch.einsum("db,caef->cdefab", g, rl)
        + torch.einsum("da,cbef->cdefab", g, rl)
        - torch.einsum("eb,cdaf->cdefab", g, rl)
        + torch.einsum("ea,cdbf->cdefab", g, rl)
        - torch.einsum("fb,cdea->cdefab", g, rl)
        + torch.einsum("fa,cdeb->cdefab", g, rl)
    )
    return TensorValue(q, "dddddd")


def ricci_tachibana(cp: CurvaturePoint) -> TensorValue:
    """Q(g, Ric)_deab."""
    g = cp.metric.g.components
    ric = cp.ricci.components
    q = (
        -torch.einsum("db,ea->deab", g, ric)
        + torch.einsum("da,eb->deab", g, ric)
        - torch.einsum("eb,da->deab", g, ric)
        + torch.einsum("ea,db->deab", g, ric)
    )
    return TensorValue(q, "dddd")


@dataclass(frozen=True)
class PseudoFit:
    l_r: float
    degenerate: bool


def _curvature_commutator(cp: CurvaturePoint) -> torch.Tensor:
    """[∇_a, ∇_b] R_cdef indexed (a, b, c, d, e, f)."""
    _need_second(cp)
    n2 = cp.nabla2_riemann_low
    return n2 - rearrange(n2, "b a c d e f -> a b c d e f")


def pseudosymmetry_fit(cp: CurvaturePoint) -> PseudoFit:
    """Least-squares L_R in [∇_a, ∇_b] R_cdef = L_R Q(g, R)_cdefab."""
    q = rearrange(tachibana(cp).components, "c d e f a b -> a b c d e f")
    norm = float(torch.linalg.vector_norm(q))
    if norm <= DEGENERATE_TOL:
        return PseudoFit(0.0, True)
    x = _curvature_commutator(cp)
    return PseudoFit(float((x * q).sum()) / norm**2, False)


def tachibana_identity(cp: CurvaturePoint) -> Identity:
    fit = pseudosymmetry_fit(cp)
    q = rearrange(tachibana(cp).components, "c d e f a b -> a b c d e f")
    return _identity(
        IdentityId.TACHIBANA,
        [("[∇_a,∇_b] R_cdef", 1.0, _curvature_commutator(cp))],
        [("L_R Q(g,R)", 1.0, fit.l_r * q)],
    )


def ricci_pseudo(cp: CurvaturePoint) -> Identity:
    _need_second(cp)
    fit = pseudosymmetry_fit(cp)
    nr2 = cp.nabla2_ricci.components
    commutator = nr2 - rearrange(nr2, "b a d e -> a b d e")
    q = rearrange(ricci_tachibana(cp).components, "d e a b -> a b d e")
    return _identity(
        IdentityId.RICCI_PSEUDO, [("[∇_a,∇_b] R_de", 1.0, commutator)], [("L_R Q(g,Ric)", 1.0, fit.l_r * q)]
    )


EVALUATORS: dict[IdentityId, Callable[[CurvaturePoint], Identity]] = {
    IdentityId.VEBLEN: veblen,
    IdentityId.WALKER: walker,
    IdentityId.LICHNEROWICZ: lichnerowicz,
    IdentityId.SECOND_ORDER: second_order,
    IdentityId.RICCI_ANTISYMMETRIC: ricci_antisymmetric,
    IdentityId.LOVELOCK: lovelock,
    IdentityId.DIVERGENCE_VEBLEN: divergence_veblen,
    IdentityId.DOUBLE_DIVERGENCE: double_divergence,
    IdentityId.LOCALLY_SYMMETRIC_RRR: algebraic_rrr,
    IdentityId.LOCALLY_SYMMETRIC_RR: algebraic_rr,
    IdentityId.LOCALLY_SYMMETRIC_RRRR: algebraic_rrrr,
    IdentityId.TACHIBANA: tachibana_identity,
    IdentityId.RICCI_PSEUDO: ricci_pseudo,
}

# hold on every metric; the algebraic ones and the pseudosymmetry fits are conditional
UNIVERSAL = (
    IdentityId.VEBLEN,
    IdentityId.WALKER,
    IdentityId.SECOND_ORDER,
    IdentityId.RICCI_ANTISYMMETRIC,
    IdentityId.LOVELOCK,
    IdentityId.K_LOVELOCK,
    IdentityId.DIVERGENCE_VEBLEN,
    IdentityId.DOUBLE_DIVERGENCE,
)


def identity_label(id: IdentityId, kind: KKind | None = None) -> str:
    return f"{id.value}[{kind.label}]" if id is IdentityId.K_LOVELOCK and kind is not None else id.value


def build_identity(cp: CurvaturePoint, id: IdentityId | str, kind: KKind | None = None) -> Identity:
    id = IdentityId(id)
    if id is IdentityId.K_LOVELOCK:
        if kind is None:
            raise ValueError("KLovelock7 needs a K tensor kind")
        return replace(k_lovelock(cp, kind), id=identity_label(id, kind))
    return EVALUATORS[id](cp)


def residual(cp: CurvaturePoint, id: IdentityId | str, kind: KKind | None = None) -> Residual:
    result = build_identity(cp, id, kind).residual()
    logger.debug("%s at %s: relative %.3e", result.id, list(cp.point), result.relative)
    return result


def mutated_residual(
    cp: CurvaturePoint,
    id: IdentityId | str,
    index: int,
    mode: Literal["flip", "drop"] = "flip",
    kind: KKind | None = None,
) -> Residual:
    """The residual after flipping the sign of, or dropping, one additive term."""
    identity = build_identity(cp, id, kind)
    if not 0 <= index < len(identity.terms):
        raise MutationError(f"{identity.id} has {len(identity.terms)} terms, cannot mutate term {index}")
    terms = list(identity.terms)
    if mode == "flip":
        terms[index] = replace(terms[index], sign=-terms[index].sign)
    elif mode == "drop":
        del terms[index]
    else:
        raise MutationError(f"mutation mode must be 'flip' or 'drop', got {mode!r}")
    return replace(identity, terms=tuple(terms)).residual()


def identity_terms(cp: CurvaturePoint, id: IdentityId | str, kind: KKind | None = None) -> tuple[Term, ...]:
    return build_identity(cp, id, kind).terms


def residual_tensor(cp: CurvaturePoint, id: IdentityId | str, kind: KKind | None = None) -> torch.Tensor:
    """The full signed sum of an identity's terms, zero when the identity holds."""
    return build_identity(cp, id, kind).total()


def contracted_second_order(cp: CurvaturePoint) -> Residual:
    """g^ab trace of the second-order identity, whose vanishing on a Ricci-flat metric is the wave equation."""
    if cp.ricci.max_abs() > RICCI_FLAT_TOL:
        return Residual.not_applicable("Main4·g")
    identity = second_order(cp)
    g_inv = cp.metric.g_inv.components
    terms = tuple(replace(t, value=torch.einsum("ab,abcdef->cdef", g_inv, t.value)) for t in identity.terms)
    return Identity("Main4·g", terms).residual()

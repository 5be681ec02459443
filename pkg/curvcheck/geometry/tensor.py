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

"""Dense tensors at a point.

Valence is a string with one character per slot: ``"d"`` for a covariant (lower)
slot and ``"u"`` for a contravariant (upper) one. The Riemann tensor R_abc^d is
``"dddu"``.
"""

import math
from dataclasses import dataclass
from itertools import permutations
from typing import Sequence

import torch
from einops import rearrange
from torch import Tensor

from ..jets import DTYPE, Jet


class ValenceError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TensorValue:
    components: Tensor
    valence: str

    def __post_init__(self):
        if set(self.valence) - {"d", "u"}:
            raise ValenceError(f"valence may only contain 'd' and 'u', got {self.valence!r}")
        if self.components.ndim != len(self.valence):
            raise ValenceError(
                f"valence {self.valence!r} does not match components of shape {tuple(self.components.shape)}"
            )
        if len(set(self.components.shape)) > 1:
            raise ValenceError(f"all slots must share one dimension, got {tuple(self.components.shape)}")

    @property
    def dim(self) -> int:
        return self.components.shape[0] if self.rank else 0

    @property
    def rank(self) -> int:
        return len(self.valence)

    def max_abs(self) -> float:
        return float(self.components.abs().max()) if self.components.numel() else 0.0

    def __add__(self, other: "TensorValue") -> "TensorValue":
        _same_valence(self, other)
        return TensorValue(self.components + other.components, self.valence)

    def __sub__(self, other: "TensorValue") -> "TensorValue":
        _same_valence(self, other)
        return TensorValue(self.components - other.components, self.valence)

    def __neg__(self) -> "TensorValue":
        return TensorValue(-self.components, self.valence)

    def __mul__(self, scale: float) -> "TensorValue":
        return TensorValue(self.components * scale, self.valence)

    __rmul__ = __mul__


def _same_valence(a: TensorValue, b: TensorValue):
    if a.valence != b.valence:
        raise ValenceError(f"valence mismatch: {a.valence!r} vs {b.valence!r}")


@dataclass(frozen=True, eq=False)
class TensorField:
    """Components of a tensor field as jets around one point."""

    jets: Jet
    valence: str

    def __post_init__(self):
        if len(self.jets.shape) != len(self.valence):
            raise ValenceError(f"valence {self.valence!r} does not match jet batch {tuple(self.jets.shape)}")

    @property
    def order(self) -> int:
        return self.jets.order

    @property
    def dim(self) -> int:
        return self.jets.dim

    def value(self) -> TensorValue:
        return TensorValue(self.jets.constant.clone(), self.valence)

    def truncate(self, order: int) -> "TensorField":
        return TensorField(self.jets.truncate(order), self.valence)


@dataclass(frozen=True, eq=False)
class MetricAtPoint:
    g: TensorValue
    g_inv: TensorValue
    signature: tuple[int, int]

    @classmethod
    def from_components(cls, g: Tensor, g_inv: Tensor) -> "MetricAtPoint":
        eig = torch.linalg.eigvalsh(g)
        signature = (int((eig < 0).sum()), int((eig > 0).sum()))
        return cls(TensorValue(g, "dd"), TensorValue(g_inv, "uu"), signature)

    @property
    def dim(self) -> int:
        return self.g.dim


def _check_slot(t: TensorValue, slot: int):
    if not 0 <= slot < t.rank:
        raise ValenceError(f"slot {slot} out of range for a rank-{t.rank} tensor")


def contract(t: TensorValue, slot_a: int, slot_b: int) -> TensorValue:
    _check_slot(t, slot_a)
    _check_slot(t, slot_b)
    if slot_a == slot_b:
        raise ValenceError("cannot contract a slot with itself")
    if {t.valence[slot_a], t.valence[slot_b]} != {"d", "u"}:
        raise ValenceError(
            f"contraction needs one lower and one upper slot, got {t.valence[slot_a]!r} and {t.valence[slot_b]!r}"
        )
    valence = "".join(v for i, v in enumerate(t.valence) if i not in (slot_a, slot_b))
    return TensorValue(torch.diagonal(t.components, dim1=slot_a, dim2=slot_b).sum(-1), valence)


def raise_lower(t: TensorValue, slot: int, metric: MetricAtPoint) -> TensorValue:
    _check_slot(t, slot)
    flip = {"d": "u", "u": "d"}[t.valence[slot]]
    m = metric.g_inv if flip == "u" else metric.g
    moved = torch.tensordot(t.components, m.components, dims=([slot], [0]))
    components = torch.movedim(moved, -1, slot)
    return TensorValue(components, t.valence[:slot] + flip + t.valence[slot + 1 :])


def _permuted(t: Tensor, slots: Sequence[int], order: Sequence[int]) -> Tensor:
    """``t`` with the listed slots relabelled: slot ``slots[i]`` takes the index that was in ``slots[order[i]]``."""
    perm = list(range(t.ndim))
    for i, j in zip(slots, order):
        perm[i] = slots[j]
    return t.permute(perm)


def _check_shared_variance(t: TensorValue, slots: Sequence[int]):
    for s in slots:
        _check_slot(t, s)
    if len(set(slots)) != len(slots):
        raise ValenceError(f"repeated slot in {list(slots)}")
    if len({t.valence[s] for s in slots}) > 1:
        raise ValenceError(f"slots {list(slots)} do not share one variance in {t.valence!r}")


def cyclic_sum(t: TensorValue, slots: Sequence[int]) -> TensorValue:
    """K_(abc) = K_abc + K_bca + K_cab over the listed slots."""
    if len(slots) not in (3, 4):
        raise ValenceError(f"cyclic sums run over 3 or 4 slots, got {len(slots)}")
    _check_shared_variance(t, slots)
    k = len(slots)
    total = torch.zeros_like(t.components)
    for shift in range(k):
        total = total + _permuted(t.components, slots, [(i + shift) % k for i in range(k)])
    return TensorValue(total, t.valence)


def _parity(perm: Sequence[int]) -> int:
    sign, seen = 1, set()
    for start in range(len(perm)):
        if start in seen:
            continue
        length, j = 0, start
        while j not in seen:
            seen.add(j)
            j = perm[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def antisymmetrize(t: TensorValue, slots: Sequence[int]) -> TensorValue:
    _check_shared_variance(t, slots)
    total = torch.zeros_like(t.components)
    for perm in permutations(range(len(slots))):
        total = total + _parity(perm) * _permuted(t.components, slots, perm)
    return TensorValue(total / math.factorial(len(slots)), t.valence)


def symmetrize(t: TensorValue, slots: Sequence[int]) -> TensorValue:
    _check_shared_variance(t, slots)
    total = torch.zeros_like(t.components)
    for perm in permutations(range(len(slots))):
        total = total + _permuted(t.components, slots, perm)
    return TensorValue(total / math.factorial(len(slots)), t.valence)


def gen_kronecker(dim: int) -> TensorValue:
    """δ^{da}_{cb} = δ^a_b δ^d_c − δ^a_c δ^d_b with slots ordered (d, a, c, b)."""
    if dim < 2:
        raise ValueError(f"the generalized Kronecker delta needs dim >= 2, got {dim}")
    eye = torch.eye(dim, dtype=DTYPE)
    components = torch.einsum("ab,dc->dacb", eye, eye) - torch.einsum("ac,db->dacb", eye, eye)
    return TensorValue(components, "uudd")


def permute_slots(t: TensorValue, pattern: str) -> TensorValue:
    """Reorder slots with an einops pattern such as ``"a b c d -> c d a b"``."""
    lhs, rhs = (side.split() for side in pattern.split("->"))
    valence = "".join(t.valence[lhs.index(name)] for name in rhs)
    return TensorValue(rearrange(t.components, pattern), valence)

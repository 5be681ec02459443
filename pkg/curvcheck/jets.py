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

"""Truncated multivariate Taylor expansions ("jets").

A :class:`Jet` carries the Taylor coefficients of a function of ``dim`` variables
around a point, up to total degree ``order``. Coefficients live in the last axis
of a ``float64`` tensor in graded order (degree 0, then degree 1, ...), so a jet
of lower order is a prefix of a jet of higher order. Leading axes batch many
jets of the same shape, which is how metric matrices and tensor fields are held.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations_with_replacement
from typing import Callable, Literal, Sequence

import torch
from torch import Tensor

logger = logging.getLogger(__name__)

MAX_ORDER = 4
# integer exponents up to this size are expanded by repeated multiplication, any base allowed
MAX_INT_EXPONENT = 64
DTYPE = torch.float64

ElementaryFn = Literal["sin", "cos", "tan", "exp", "log", "sqrt", "sinh", "cosh", "tanh"]


class SingularPointError(ValueError):
    """A jet operation left the domain where the expansion exists."""


@dataclass(frozen=True, eq=False)
class MonomialBasis:
    dim: int
    order: int
    exponents: tuple[tuple[int, ...], ...]
    index: dict[tuple[int, ...], int]
    degree: Tensor
    factorial: Tensor
    # Cauchy product table: coefficient ``left`` times ``right`` lands on ``target``.
    left: Tensor
    right: Tensor
    target: Tensor
    blocks: tuple[tuple[int, int], ...]

    @property
    def size(self) -> int:
        return len(self.exponents)


@lru_cache(maxsize=None)
def monomial_basis(dim: int, order: int) -> MonomialBasis:
    if dim < 1:
        raise ValueError(f"jet dimension must be positive, got {dim}")
    if not 0 <= order <= MAX_ORDER:
        raise ValueError(f"jet order must be in 0..{MAX_ORDER}, got {order}")

    exponents: list[tuple[int, ...]] = []
    blocks = []
    for deg in range(order + 1):
        start = len(exponents)
        for combo in combinations_with_replacement(range(dim), deg):
            exp = [0] * dim
            for i in combo:
                exp[i] += 1
            exponents.append(tuple(exp))
        blocks.append((start, len(exponents)))
    index = {e: i for i, e in enumerate(exponents)}

    left, right, target = [], [], []
    for i, ei in enumerate(exponents):
        for j, ej in enumerate(exponents):
            if sum(ei) + sum(ej) <= order:
                left.append(i)
                right.append(j)
                target.append(index[tuple(a + b for a, b in zip(ei, ej))])

    return MonomialBasis(
        dim=dim,
        order=order,
        exponents=tuple(exponents),
        index=index,
        degree=torch.tensor([sum(e) for e in exponents], dtype=torch.long),
        factorial=torch.tensor([math.prod(math.factorial(k) for k in e) for e in exponents], dtype=DTYPE),
        left=torch.tensor(left, dtype=torch.long),
        right=torch.tensor(right, dtype=torch.long),
        target=torch.tensor(target, dtype=torch.long),
        blocks=tuple(blocks),
    )


@lru_cache(maxsize=None)
def _derivative_table(dim: int, order: int, k: int) -> tuple[Tensor, Tensor]:
    """Source positions and factors mapping an order-``order`` jet to its ∂_k jet."""
    src = monomial_basis(dim, order)
    dst = monomial_basis(dim, order - 1)
    sources, factors = [], []
    for exp in dst.exponents:
        shifted = list(exp)
        shifted[k] += 1
        sources.append(src.index[tuple(shifted)])
        factors.append(float(shifted[k]))
    return torch.tensor(sources, dtype=torch.long), torch.tensor(factors, dtype=DTYPE)


@lru_cache(maxsize=None)
def _graded_pairs(dim: int, order: int, degree: int) -> tuple[Tensor, Tensor, Tensor]:
    """Product pairs landing on ``degree`` whose right factor has a lower degree."""
    basis = monomial_basis(dim, order)
    target_deg = basis.degree[basis.target]
    right_deg = basis.degree[basis.right]
    keep = (target_deg == degree) & (right_deg < degree)
    return basis.left[keep], basis.right[keep], basis.target[keep]


def _cauchy(a: Tensor, b: Tensor, basis: MonomialBasis) -> Tensor:
    prod = a[..., basis.left] * b[..., basis.right]
    out = prod.new_zeros(prod.shape[:-1] + (basis.size,))
    return out.index_add_(prod.ndim - 1, basis.target, prod)


@dataclass(frozen=True, eq=False)
class Jet:
    """Taylor coefficients (derivative / multi-index factorial) in the last axis of ``coeffs``."""

    dim: int
    order: int
    coeffs: Tensor

    def __post_init__(self):
        size = monomial_basis(self.dim, self.order).size
        if self.coeffs.shape[-1:] != (size,):
            raise ValueError(
                f"jet of dim {self.dim} and order {self.order} needs {size} coefficients, "
                f"got shape {tuple(self.coeffs.shape)}"
            )

    @property
    def basis(self) -> MonomialBasis:
        return monomial_basis(self.dim, self.order)

    @property
    def shape(self) -> torch.Size:
        return self.coeffs.shape[:-1]

    @property
    def constant(self) -> Tensor:
        return self.coeffs[..., 0]

    @classmethod
    def constant_like(cls, value: float | Tensor, dim: int, order: int) -> "Jet":
        value = torch.as_tensor(value, dtype=DTYPE)
        coeffs = torch.zeros(value.shape + (monomial_basis(dim, order).size,), dtype=DTYPE)
        coeffs[..., 0] = value
        return cls(dim, order, coeffs)

    def __getitem__(self, idx) -> "Jet":
        if not isinstance(idx, tuple):
            idx = (idx,)
        return Jet(self.dim, self.order, self.coeffs[idx + (slice(None),)])

    def _check(self, other: "Jet"):
        if other.dim != self.dim or other.order != self.order:
            raise ValueError(
                f"jet operands disagree: (dim {self.dim}, order {self.order}) vs (dim {other.dim}, order {other.order})"
            )

    def _lift(self, other) -> "Jet":
        if isinstance(other, Jet):
            self._check(other)
            return other
        return Jet.constant_like(other, self.dim, self.order)

    def __add__(self, other) -> "Jet":
        other = self._lift(other)
        return Jet(self.dim, self.order, self.coeffs + other.coeffs)

    __radd__ = __add__

    def __neg__(self) -> "Jet":
        return Jet(self.dim, self.order, -self.coeffs)

    def __sub__(self, other) -> "Jet":
        return self + (-self._lift(other))

    def __rsub__(self, other) -> "Jet":
        return self._lift(other) - self

    def __mul__(self, other) -> "Jet":
        if isinstance(other, (int, float)):
            return Jet(self.dim, self.order, self.coeffs * other)
        other = self._lift(other)
        return Jet(self.dim, self.order, _cauchy(self.coeffs, other.coeffs, self.basis))

    __rmul__ = __mul__

    def __truediv__(self, other) -> "Jet":
        if isinstance(other, (int, float)):
            if other == 0:
                raise SingularPointError("division by the zero constant")
            return Jet(self.dim, self.order, self.coeffs / other)
        return _divide(self, self._lift(other))

    def __rtruediv__(self, other) -> "Jet":
        return _divide(self._lift(other), self)

    def __pow__(self, k: int) -> "Jet":
        return jet_pow_int(self, k)

    def truncate(self, order: int) -> "Jet":
        if not 0 <= order <= self.order:
            raise ValueError(f"cannot truncate an order-{self.order} jet to order {order}")
        size = monomial_basis(self.dim, order).size
        return Jet(self.dim, order, self.coeffs[..., :size])

    def partial(self, k: int) -> "Jet":
        """The jet of ∂f/∂x^k, one order lower."""
        if not 0 <= k < self.dim:
            raise ValueError(f"variable index {k} out of range for dim {self.dim}")
        if self.order == 0:
            raise ValueError("an order-0 jet carries no derivatives")
        sources, factors = _derivative_table(self.dim, self.order, k)
        return Jet(self.dim, self.order - 1, self.coeffs[..., sources] * factors)

    def coefficient(self, multi_index: Sequence[int]) -> Tensor:
        return self.coeffs[..., self.basis.index[tuple(multi_index)]]


def _divide(a: Jet, b: Jet) -> Jet:
    b0 = b.constant
    if bool((b0.abs() <= torch.finfo(DTYPE).tiny).any()):
        raise SingularPointError("division by a jet with zero constant term")
    shape = torch.broadcast_shapes(a.shape, b.shape)
    q = torch.zeros(shape + (a.basis.size,), dtype=DTYPE)
    rhs = a.coeffs.expand_as(q)
    for deg, (start, stop) in enumerate(a.basis.blocks):
        left, right, target = _graded_pairs(a.dim, a.order, deg)
        acc = torch.zeros_like(q)
        acc.index_add_(q.ndim - 1, target, b.coeffs[..., left] * q[..., right])
        q[..., start:stop] = (rhs[..., start:stop] - acc[..., start:stop]) / b0[..., None]
    return Jet(a.dim, a.order, q)


def jet_variable(dim: int, order: int, index: int, value: float) -> Jet:
    if not 0 <= index < dim:
        raise ValueError(f"variable index {index} out of range for dim {dim}")
    jet = Jet.constant_like(value, dim, order)
    if order >= 1:
        jet.coeffs[1 + index] = 1.0
    return jet


def jet_variables(point: Sequence[float], order: int) -> list[Jet]:
    return [jet_variable(len(point), order, i, x) for i, x in enumerate(point)]


def jet_arith(a: Jet, b: Jet, op: Literal["add", "sub", "mul", "div"]) -> Jet:
    a._check(b)
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown jet operation {op!r}")


def _compose(a: Jet, taylor: Tensor) -> Jet:
    """f(a) from the univariate Taylor coefficients f^(k)(a0)/k!, stacked in the last axis."""
    h = a.coeffs.clone()
    h[..., 0] = 0.0
    h = Jet(a.dim, a.order, h)
    out = Jet.constant_like(taylor[..., 0], a.dim, a.order).coeffs.clone()
    power = Jet.constant_like(torch.ones_like(a.constant), a.dim, a.order)
    for k in range(1, a.order + 1):
        power = power * h
        out = out + taylor[..., k, None] * power.coeffs
    return Jet(a.dim, a.order, out)


def _derivatives(fn: ElementaryFn, x: Tensor) -> list[Tensor]:
    if fn == "exp":
        e = torch.exp(x)
        return [e] * 5
    if fn == "sin":
        s, c = torch.sin(x), torch.cos(x)
        return [s, c, -s, -c, s]
    if fn == "cos":
        s, c = torch.sin(x), torch.cos(x)
        return [c, -s, -c, s, c]
    if fn == "sinh":
        s, c = torch.sinh(x), torch.cosh(x)
        return [s, c, s, c, s]
    if fn == "cosh":
        s, c = torch.sinh(x), torch.cosh(x)
        return [c, s, c, s, c]
    if fn == "tan":
        t = torch.tan(x)
        s = 1 + t**2
        return [t, s, 2 * t * s, 2 * s * (1 + 3 * t**2), 8 * t * s * (2 + 3 * t**2)]
    if fn == "tanh":
        u = torch.tanh(x)
        s = 1 - u**2
        return [u, s, -2 * u * s, -2 * s * (1 - 3 * u**2), 8 * u * s * (2 - 3 * u**2)]
    if fn == "log":
        return [torch.log(x), 1 / x, -1 / x**2, 2 / x**3, -6 / x**4]
    if fn == "sqrt":
        return _power_derivatives(x, 0.5)
    raise ValueError(f"unknown elementary function {fn!r}")


def _power_derivatives(x: Tensor, r: float) -> list[Tensor]:
    out, falling = [], 1.0
    for k in range(MAX_ORDER + 1):
        out.append(falling * torch.pow(x, r - k))
        falling *= r - k
    return out


def _taylor(derivs: list[Tensor], order: int) -> Tensor:
    return torch.stack([derivs[k] / math.factorial(k) for k in range(order + 1)], dim=-1)


def jet_elementary(a: Jet, fn: ElementaryFn) -> Jet:
    x = a.constant
    if fn in ("log", "sqrt") and bool((x <= 0).any()):
        raise SingularPointError(f"{fn} needs a positive argument, got {x.min().item()}")
    if fn == "tan" and bool((torch.cos(x).abs() < 1e-12).any()):
        raise SingularPointError("tan evaluated at a pole")
    return _compose(a, _taylor(_derivatives(fn, x), a.order))


def jet_pow_const(a: Jet, r: float) -> Jet:
    """a**r for a real exponent; the base must be positive unless r is an integer."""
    if float(r).is_integer() and abs(r) <= MAX_INT_EXPONENT:
        return jet_pow_int(a, int(r))
    x = a.constant
    if bool((x <= 0).any()):
        raise SingularPointError(f"non-integer power {r} of a non-positive base {x.min().item()}")
    return _compose(a, _taylor(_power_derivatives(x, r), a.order))


def jet_pow_int(a: Jet, k: int) -> Jet:
    if k < 0:
        return 1.0 / jet_pow_int(a, -k)
    result = Jet.constant_like(torch.ones_like(a.constant), a.dim, a.order)
    base = a
    while k:
        if k & 1:
            result = result * base
        k >>= 1
        if k:
            base = base * base
    return result


def extract_partial(a: Jet, multi_index: Sequence[int]) -> Tensor:
    """The partial derivative ∂^m f at the expansion point."""
    multi_index = tuple(int(m) for m in multi_index)
    if len(multi_index) != a.dim or min(multi_index) < 0:
        raise ValueError(f"multi-index {multi_index} does not fit dim {a.dim}")
    if sum(multi_index) > a.order:
        raise ValueError(f"derivative of degree {sum(multi_index)} exceeds jet order {a.order}")
    scale = math.prod(math.factorial(m) for m in multi_index)
    return a.coefficient(multi_index) * scale


def jet_gradient(a: Jet) -> Jet:
    """All first partials, stacked on a new leading axis."""
    return Jet(a.dim, a.order - 1, torch.stack([a.partial(k).coeffs for k in range(a.dim)]))


def _spare_letter(equation: str) -> str:
    return next(c for c in "zyxwvutsrqponmlkjihgfedcbaZYXWVUTSRQPONMLKJIHGFEDCBA" if c not in equation)


def jet_einsum(equation: str, a: Jet, b: Jet) -> Jet:
    """Einsum over the batch axes of two jets with a Cauchy product over their coefficients."""
    a._check(b)
    inputs, output = equation.replace(" ", "").split("->")
    sa, sb = inputs.split(",")
    p = _spare_letter(equation)
    basis = a.basis
    prod = torch.einsum(f"{sa}{p},{sb}{p}->{output}{p}", a.coeffs[..., basis.left], b.coeffs[..., basis.right])
    out = prod.new_zeros(prod.shape[:-1] + (basis.size,))
    return Jet(a.dim, a.order, out.index_add_(prod.ndim - 1, basis.target, prod))


def jet_linear(fn: Callable[[Tensor], Tensor], a: Jet) -> Jet:
    """Apply a map that is linear in the batch axes (traces, permutations) to every coefficient."""
    return Jet(a.dim, a.order, fn(a.coeffs))


def jet_inverse(a: Jet, tol: float = 1e-300) -> Jet:
    """Inverse of a square matrix of jets by elimination with partial pivoting."""
    n = a.shape[0]
    assert a.shape == (n, n), f"expected a square jet matrix, got {tuple(a.shape)}"
    eye = Jet.constant_like(torch.eye(n, dtype=DTYPE), a.dim, a.order)
    aug = torch.cat([a.coeffs, eye.coeffs], dim=1)
    for col in range(n):
        pivot = col + int(torch.argmax(aug[col:, col, 0].abs()))
        if aug[pivot, col, 0].abs() <= tol:
            raise SingularPointError("matrix of jets is singular at the expansion point")
        if pivot != col:
            aug[[col, pivot]] = aug[[pivot, col]]
        row = Jet(a.dim, a.order, aug[col]) / Jet(a.dim, a.order, aug[col, col])
        for r in range(n):
            if r != col:
                aug[r] = (Jet(a.dim, a.order, aug[r]) - Jet(a.dim, a.order, aug[r, col]) * row).coeffs
        aug[col] = row.coeffs
    logger.debug("inverted a %dx%d jet matrix of order %d", n, n, a.order)
    return Jet(a.dim, a.order, aug[:, n:].clone())

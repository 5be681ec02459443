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

"""Line-oriented metric files.

    dim 2
    coords th ph
    domain th 0.4 2.7
    domain ph 0 6
    g 0 0 1
    g 1 1 sin(th)^2

Expressions follow the usual precedence with a right-associative ``^``; a leading
minus binds tighter than ``^``, so ``-x^2`` is ``(-x)^2``.
"""

import logging
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import torch

from ..jets import MAX_ORDER, Jet, jet_elementary, jet_pow_const, jet_variables

logger = logging.getLogger(__name__)

MAX_DIM = 6
DOMAIN_SLACK = 1e-12
FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "sinh", "cosh", "tanh")


class MetricLoadError(ValueError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = "" if line is None else f"line {line}" + ("" if column is None else f", column {column}")
        super().__init__(f"{where}: {message}" if where else message)


class MetricSyntaxError(MetricLoadError):
    pass


class UnknownIdentifierError(MetricLoadError):
    pass


class DimensionMismatchError(MetricLoadError):
    pass


class InconsistentComponentError(MetricLoadError):
    pass


class MissingDomainError(MetricLoadError):
    pass


class MetricEvaluationError(MetricLoadError):
    """A component has no finite real value at a point, e.g. a pole or a logarithm of a negative number."""


class OutsideDomainError(ValueError):
    pass


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Coord:
    name: str


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Neg:
    child: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    fn: str
    child: "Expr"


Expr = Union[Const, Coord, Param, Neg, BinOp, Call]

ZERO = Const(0.0)


@dataclass(frozen=True)
class MetricSpec:
    name: str
    dim: int
    coords: tuple[str, ...]
    params: dict[str, float]
    domain: tuple[tuple[float, float], ...]
    components: tuple[tuple[Expr, ...], ...]

    def component(self, a: int, b: int) -> Expr:
        return self.components[a][b]

    def coordinate_index(self, name: str) -> int:
        return self.coords.index(name)


# --- tokenizer -------------------------------------------------------------------------

_TOKEN = re.compile(
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<ident>[^\W\d]\w*)|(?P<op>[-+*/^()])|(?P<space>\s+)"
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    column: int


def tokenize(source: str, line: int = 1) -> list[Token]:
    tokens, pos = [], 0
    while pos < len(source):
        m = _TOKEN.match(source, pos)
        if m is None:
            raise MetricSyntaxError(f"unexpected character {source[pos]!r}", line, pos + 1)
        if m.lastgroup != "space":
            tokens.append(Token(m.lastgroup, m.group(), line, pos + 1))
        pos = m.end()
    return tokens


# --- expression parser -----------------------------------------------------------------


class _ExprParser:
    def __init__(self, tokens: list[Token], coords: Sequence[str], params: dict[str, float], line: int, end: int):
        self.tokens = tokens
        self.pos = 0
        self.coords = coords
        self.params = params
        self.line = line
        self.end = end

    def peek(self) -> Token | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def advance(self) -> Token:
        tok = self.peek()
        if tok is None:
            raise MetricSyntaxError("unexpected end of expression", self.line, self.end)
        self.pos += 1
        return tok

    def accept(self, *ops: str) -> Token | None:
        tok = self.peek()
        if tok is not None and tok.kind == "op" and tok.text in ops:
            self.pos += 1
            return tok
        return None

    def parse(self) -> Expr:
        expr = self.expr()
        tok = self.peek()
        if tok is not None:
            raise MetricSyntaxError(f"unexpected {tok.text!r} after expression", tok.line, tok.column)
        return expr

    def expr(self) -> Expr:
        node = self.term()
        while (tok := self.accept("+", "-")) is not None:
            node = BinOp(tok.text, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.factor()
        while (tok := self.accept("*", "/")) is not None:
            node = BinOp(tok.text, node, self.factor())
        return node

    def factor(self) -> Expr:
        base = self.unary()
        if self.accept("^") is not None:
            return BinOp("^", base, self.factor())
        return base

    def unary(self) -> Expr:
        if self.accept("-") is not None:
            return Neg(self.unary())
        return self.atom()

    def atom(self) -> Expr:
        tok = self.advance()
        if tok.kind == "num":
            return Const(float(tok.text))
        if tok.kind == "ident":
            if self.accept("(") is not None:
                if tok.text not in FUNCTIONS:
                    raise UnknownIdentifierError(f"unknown function {tok.text!r}", tok.line, tok.column)
                child = self.expr()
                self.expect_close(tok)
                return Call(tok.text, child)
            if tok.text in self.coords:
                return Coord(tok.text)
            if tok.text in self.params:
                return Param(tok.text)
            raise UnknownIdentifierError(f"unknown identifier {tok.text!r}", tok.line, tok.column)
        if tok.text == "(":
            child = self.expr()
            self.expect_close(tok)
            return child
        raise MetricSyntaxError(f"unexpected {tok.text!r}", tok.line, tok.column)

    def expect_close(self, opener: Token):
        if self.accept(")") is None:
            raise MetricSyntaxError("unbalanced parenthesis", opener.line, opener.column)


def parse_expr(source: str, coords: Sequence[str] = (), params: dict[str, float] | None = None) -> Expr:
    return _ExprParser(tokenize(source), coords, params or {}, 1, len(source) + 1).parse()


# --- metric files ----------------------------------------------------------------------


def _integer(tok: Token) -> int:
    if tok.kind != "num" or not tok.text.isdigit():
        raise MetricSyntaxError(f"expected a non-negative integer, got {tok.text!r}", tok.line, tok.column)
    return int(tok.text)


def _ident(tok: Token) -> str:
    if tok.kind != "ident":
        raise MetricSyntaxError(f"expected a name, got {tok.text!r}", tok.line, tok.column)
    return tok.text


def _reals(tokens: list[Token], count: int, line: int) -> list[float]:
    values, pos = [], 0
    for _ in range(count):
        sign = 1.0
        if pos < len(tokens) and tokens[pos].text in "+-" and tokens[pos].kind == "op":
            sign = -1.0 if tokens[pos].text == "-" else 1.0
            pos += 1
        if pos >= len(tokens) or tokens[pos].kind != "num":
            tok = tokens[pos] if pos < len(tokens) else None
            raise MetricSyntaxError(
                "expected a number", line, tok.column if tok else (tokens[-1].column + 1 if tokens else 1)
            )
        values.append(sign * float(tokens[pos].text))
        pos += 1
    if pos != len(tokens):
        raise MetricSyntaxError(f"unexpected {tokens[pos].text!r}", line, tokens[pos].column)
    return values


def _arity(tokens: list[Token], count: int, line: int, directive: str):
    if len(tokens) != count:
        where = tokens[count].column if len(tokens) > count else None
        raise MetricSyntaxError(f"'{directive}' expects {count} argument(s), got {len(tokens)}", line, where)


def _coordinates_in(expr: Expr) -> set[str]:
    if isinstance(expr, Coord):
        return {expr.name}
    if isinstance(expr, (Neg, Call)):
        return _coordinates_in(expr.child)
    if isinstance(expr, BinOp):
        return _coordinates_in(expr.left) | _coordinates_in(expr.right)
    return set()


def parse_metric(text: str, name: str | None = None) -> MetricSpec:
    """Parse metric source text.

    ``g i j`` and ``g j i`` may both appear; they must parse to the same expression tree, so
    spacing and redundant parentheses may differ between the two lines.
    """
    directives: list[tuple[str, list[Token], int, Token]] = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        content = raw.split("#", 1)[0]
        tokens = tokenize(content, lineno)
        if not tokens:
            continue
        head = tokens[0]
        if head.kind != "ident" or head.text not in ("dim", "name", "coords", "param", "domain", "g"):
            raise MetricSyntaxError(f"unknown directive {head.text!r}", lineno, head.column)
        directives.append((head.text, tokens[1:], lineno, head))

    dim, coords, params, bounds = None, None, {}, {}
    coords_line = None
    for kind, args, lineno, head in directives:
        if kind == "dim":
            _arity(args, 1, lineno, kind)
            dim = _integer(args[0])
            if not 1 <= dim <= MAX_DIM:
                raise DimensionMismatchError(f"dimension must be in 1..{MAX_DIM}, got {dim}", lineno, args[0].column)
        elif kind == "name":
            _arity(args, 1, lineno, kind)
            name = _ident(args[0])
        elif kind == "coords":
            if not args:
                raise MetricSyntaxError("'coords' needs at least one name", lineno, head.column)
            coords = [_ident(tok) for tok in args]
            coords_line = lineno
            if len(set(coords)) != len(coords):
                raise MetricSyntaxError("duplicate coordinate name", lineno, head.column)
        elif kind == "param":
            if not args:
                raise MetricSyntaxError("'param' needs a name and a value", lineno, head.column)
            params[_ident(args[0])] = _reals(args[1:], 1, lineno)[0]
        elif kind == "domain":
            if not args:
                raise MetricSyntaxError("'domain' needs a coordinate and two bounds", lineno, head.column)
            lo, hi = _reals(args[1:], 2, lineno)
            if not lo < hi:
                raise MetricSyntaxError(f"empty domain [{lo}, {hi}]", lineno, args[1].column)
            bounds[_ident(args[0])] = (lo, hi, lineno, args[0].column)

    if dim is None:
        raise MetricSyntaxError("missing 'dim' directive", 1, 1)
    if coords is None:
        raise MetricSyntaxError("missing 'coords' directive", 1, 1)
    if len(coords) != dim:
        raise DimensionMismatchError(f"'coords' lists {len(coords)} names for dim {dim}", coords_line)
    for pname in params:
        if pname in coords or pname in FUNCTIONS:
            raise MetricSyntaxError(f"parameter {pname!r} shadows a coordinate or function")
    for cname, (_, _, lineno, column) in bounds.items():
        if cname not in coords:
            raise UnknownIdentifierError(f"domain given for unknown coordinate {cname!r}", lineno, column)

    components: dict[tuple[int, int], tuple[Expr, int]] = {}
    used: dict[str, int] = {}
    for kind, args, lineno, head in directives:
        if kind != "g":
            continue
        if len(args) < 3:
            raise MetricSyntaxError("'g' expects two indices and an expression", lineno, head.column)
        a, b = _integer(args[0]), _integer(args[1])
        if a >= dim or b >= dim:
            raise DimensionMismatchError(f"component ({a}, {b}) out of range for dim {dim}", lineno, args[0].column)
        end = args[-1].column + len(args[-1].text)
        expr = _ExprParser(args[2:], coords, params, lineno, end).parse()
        for cname in _coordinates_in(expr):
            used.setdefault(cname, lineno)
        key = (min(a, b), max(a, b))
        if key in components and components[key][0] != expr:
            raise InconsistentComponentError(
                f"component ({a}, {b}) disagrees with line {components[key][1]}", lineno, head.column
            )
        components[key] = (expr, lineno)

    domain = []
    for cname in coords:
        if cname in bounds:
            domain.append(bounds[cname][:2])
        elif cname in used:
            raise MissingDomainError(f"coordinate {cname!r} has no domain", used[cname])
        else:
            domain.append((0.0, 1.0))

    matrix = tuple(
        tuple(components.get((min(a, b), max(a, b)), (ZERO, 0))[0] for b in range(dim)) for a in range(dim)
    )
    spec = MetricSpec(
        name=name or "metric",
        dim=dim,
        coords=tuple(coords),
        params=dict(params),
        domain=tuple(domain),
        components=matrix,
    )
    logger.debug("parsed metric %s (dim %d, coords %s)", spec.name, dim, " ".join(coords))
    return spec


def load_metric(path: str | Path) -> MetricSpec:
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    spec = parse_metric(text)
    if not re.search(r"^\s*name\b", text, flags=re.MULTILINE):
        spec = MetricSpec(path.stem, spec.dim, spec.coords, spec.params, spec.domain, spec.components)
    return spec


# --- serializer ------------------------------------------------------------------------


def _level(expr: Expr) -> int:
    if isinstance(expr, BinOp):
        return {"+": 1, "-": 1, "*": 2, "/": 2, "^": 3}[expr.op]
    if isinstance(expr, Neg):
        return 4
    return 5


def dump_expr(expr: Expr, min_level: int = 1) -> str:
    if isinstance(expr, Const):
        assert expr.value >= 0 and math.isfinite(expr.value), f"cannot print constant {expr.value}"
        text = repr(float(expr.value))
    elif isinstance(expr, (Coord, Param)):
        text = expr.name
    elif isinstance(expr, Neg):
        text = "-" + dump_expr(expr.child, 4)
    elif isinstance(expr, Call):
        text = f"{expr.fn}({dump_expr(expr.child)})"
    else:
        left, right = {"+": (1, 2), "-": (1, 2), "*": (2, 3), "/": (2, 3), "^": (4, 3)}[expr.op]
        text = f"{dump_expr(expr.left, left)} {expr.op} {dump_expr(expr.right, right)}"
    return f"({text})" if _level(expr) < min_level else text


def dump_metric(spec: MetricSpec) -> str:
    lines = [f"name {spec.name}", f"dim {spec.dim}", "coords " + " ".join(spec.coords)]
    lines += [f"param {k} {v!r}" for k, v in spec.params.items()]
    lines += [f"domain {c} {lo!r} {hi!r}" for c, (lo, hi) in zip(spec.coords, spec.domain)]
    for a in range(spec.dim):
        for b in range(a, spec.dim):
            if spec.components[a][b] != ZERO:
                lines.append(f"g {a} {b} {dump_expr(spec.components[a][b])}")
    return "\n".join(lines) + "\n"


# --- evaluation ------------------------------------------------------------------------

_FLOAT_FNS = {
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "exp": math.exp,
    "log": math.log,
    "sqrt": math.sqrt,
    "sinh": math.sinh,
    "cosh": math.cosh,
    "tanh": math.tanh,
}


def eval_float(expr: Expr, env: dict[str, float]) -> float:
    """Plain floating-point evaluation; ``env`` maps coordinate and parameter names to values."""
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, (Coord, Param)):
        return env[expr.name]
    if isinstance(expr, Neg):
        return -eval_float(expr.child, env)
    if isinstance(expr, Call):
        return _FLOAT_FNS[expr.fn](eval_float(expr.child, env))
    left, right = eval_float(expr.left, env), eval_float(expr.right, env)
    if expr.op == "+":
        return left + right
    if expr.op == "-":
        return left - right
    if expr.op == "*":
        return left * right
    if expr.op == "/":
        return left / right
    return left**right


def eval_jet(expr: Expr, variables: list[Jet], spec: MetricSpec) -> Jet:
    dim, order = variables[0].dim, variables[0].order
    if isinstance(expr, Const):
        return Jet.constant_like(expr.value, dim, order)
    if isinstance(expr, Param):
        return Jet.constant_like(spec.params[expr.name], dim, order)
    if isinstance(expr, Coord):
        return variables[spec.coordinate_index(expr.name)]
    if isinstance(expr, Neg):
        return -eval_jet(expr.child, variables, spec)
    if isinstance(expr, Call):
        return jet_elementary(eval_jet(expr.child, variables, spec), expr.fn)
    left = eval_jet(expr.left, variables, spec)
    if expr.op == "^":
        if not _coordinates_in(expr.right):
            return jet_pow_const(left, eval_float(expr.right, spec.params))
        return jet_elementary(eval_jet(expr.right, variables, spec) * jet_elementary(left, "log"), "exp")
    right = eval_jet(expr.right, variables, spec)
    if expr.op == "+":
        return left + right
    if expr.op == "-":
        return left - right
    if expr.op == "*":
        return left * right
    return left / right


def check_domain(spec: MetricSpec, point: Sequence[float]):
    if len(point) != spec.dim:
        raise ValueError(f"point has {len(point)} coordinates, metric {spec.name} has {spec.dim}")
    for name, x, (lo, hi) in zip(spec.coords, point, spec.domain):
        if not lo - DOMAIN_SLACK <= x <= hi + DOMAIN_SLACK:
            raise OutsideDomainError(f"{name} = {x} lies outside [{lo}, {hi}] for metric {spec.name}")


def eval_metric(spec: MetricSpec, point: Sequence[float], order: int = MAX_ORDER, strict: bool = True) -> Jet:
    """The metric components at ``point`` as a (dim, dim) batch of jets."""
    if strict:
        check_domain(spec, point)
    variables = jet_variables([float(x) for x in point], order)
    cache: dict[Expr, Jet] = {}
    rows = []
    for a in range(spec.dim):
        row = []
        for b in range(spec.dim):
            expr = spec.components[a][b]
            if expr not in cache:
                cache[expr] = eval_jet(expr, variables, spec)
            row.append(cache[expr].coeffs)
        rows.append(torch.stack(row))
    return Jet(spec.dim, order, torch.stack(rows))


def metric_values(spec: MetricSpec, point: Sequence[float]) -> list[list[float]]:
    env = dict(spec.params) | dict(zip(spec.coords, (float(x) for x in point)))
    rows = []
    for a in range(spec.dim):
        row = []
        for b in range(spec.dim):
            try:
                value = eval_float(spec.components[a][b], env)
            except (ZeroDivisionError, OverflowError, ValueError) as e:
                raise MetricEvaluationError(f"g {a} {b} cannot be evaluated at {list(point)}: {e}") from e
            if isinstance(value, complex) or not math.isfinite(value):
                raise MetricEvaluationError(f"g {a} {b} is not a finite real number at {list(point)}")
            row.append(value)
        rows.append(row)
    return rows


__all__ = [
    "MAX_DIM",
    "MAX_ORDER",
    "BinOp",
    "Call",
    "Const",
    "Coord",
    "DimensionMismatchError",
    "Expr",
    "InconsistentComponentError",
    "MetricEvaluationError",
    "MetricLoadError",
    "MetricSpec",
    "MetricSyntaxError",
    "MissingDomainError",
    "Neg",
    "OutsideDomainError",
    "Param",
    "UnknownIdentifierError",
    "check_domain",
    "dump_expr",
    "dump_metric",
    "eval_float",
    "eval_jet",
    "eval_metric",
    "load_metric",
    "metric_values",
    "parse_expr",
    "parse_metric",
]

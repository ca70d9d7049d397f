"""Small arithmetic expression language for analytic distances and maps.

Grammar (lowest to highest precedence)::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := "-" unary | primary
    primary := NUMBER | NAME | NAME "(" expr ("," expr)* ")" | "(" expr ")"

Functions are ``abs`` (one argument), ``min`` and ``max`` (two).  Literals
are exact decimals, so evaluating on ``Fraction`` inputs stays exact;
evaluating on floats gives floats.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Union

__all__ = [
    "ParseError",
    "EvaluationError",
    "Num",
    "Var",
    "Neg",
    "BinOp",
    "Call",
    "Expr",
    "parse_expression",
    "to_text",
]

FUNCTIONS = {"abs": 1, "min": 2, "max": 2}


class ParseError(ValueError):
    def __init__(self, message: str, text: str, position: int):
        self.message = message
        self.text = text
        self.position = position
        super().__init__(f"{message} at position {position}\n  {text}\n  {' ' * position}^")


class EvaluationError(ArithmeticError):
    pass


@dataclass(frozen=True)
class Num:
    value: Fraction
    span: tuple = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Var:
    name: str
    span: tuple = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Neg:
    operand: "Node"
    span: tuple = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"
    span: tuple = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple
    span: tuple = field(default=None, compare=False, repr=False)


Node = Union[Num, Var, Neg, BinOp, Call]

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/(),]))"
)


def _tokenize(text: str):
    pos = 0
    tokens = []
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected character {text[pos]!r}", text, pos)
        kind = m.lastgroup
        start = m.start(kind)
        tokens.append((kind, m.group(kind), start, m.end()))
        pos = m.end()
    tokens.append(("end", "", len(text), len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, variables: frozenset):
        self.text = text
        self.variables = variables
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message, tok):
        raise ParseError(message, self.text, tok[2])

    def expect(self, value):
        tok = self.take()
        if tok[1] != value:
            if tok[0] == "end" and value == ")":
                self.error("unbalanced parentheses: missing ')'", tok)
            self.error(f"expected {value!r}", tok)
        return tok

    def parse(self) -> Node:
        node = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            if tok[1] == ")":
                self.error("unbalanced parentheses: unexpected ')'", tok)
            self.error(f"unexpected {tok[1]!r}", tok)
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.take()[1]
            right = self.term()
            node = BinOp(op, node, right, (node.span[0], right.span[1]))
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.peek()[1] in ("*", "/"):
            op = self.take()[1]
            right = self.unary()
            if op == "/" and _is_literal_zero(right):
                raise ParseError("division by a literal zero", self.text, right.span[0])
            node = BinOp(op, node, right, (node.span[0], right.span[1]))
        return node

    def unary(self) -> Node:
        tok = self.peek()
        if tok[1] == "-":
            self.take()
            operand = self.unary()
            return Neg(operand, (tok[2], operand.span[1]))
        return self.primary()

    def primary(self) -> Node:
        tok = self.take()
        kind, value, start, end = tok
        if kind == "num":
            return Num(Fraction(value), (start, end))
        if kind == "name":
            if self.peek()[1] == "(":
                if value not in FUNCTIONS:
                    self.error(f"unknown function {value!r}", tok)
                self.take()
                args = [self.expr()]
                while self.peek()[1] == ",":
                    self.take()
                    args.append(self.expr())
                close = self.expect(")")
                if len(args) != FUNCTIONS[value]:
                    self.error(f"{value} takes {FUNCTIONS[value]} argument(s), got {len(args)}", tok)
                return Call(value, tuple(args), (start, close[3]))
            if value in FUNCTIONS:
                self.error(f"function {value!r} needs arguments", tok)
            if value not in self.variables:
                allowed = ", ".join(sorted(self.variables)) or "none"
                self.error(f"unknown identifier {value!r} (allowed: {allowed})", tok)
            return Var(value, (start, end))
        if value == "(":
            node = self.expr()
            close = self.expect(")")
            return _respan(node, (start, close[3]))
        if kind == "end":
            self.error("unexpected end of expression", tok)
        if value == ")":
            self.error("unbalanced parentheses: unexpected ')'", tok)
        self.error(f"unexpected {value!r}", tok)


def _respan(node: Node, span) -> Node:
    # parentheses widen the span without changing the tree
    return type(node)(*[getattr(node, f) for f in node.__dataclass_fields__ if f != "span"], span=span)


def _is_literal_zero(node: Node) -> bool:
    while isinstance(node, Neg):
        node = node.operand
    return isinstance(node, Num) and node.value == 0


# -------------------------------------------------------------------------
# printing


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _prec(node: Node) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return 3
    return 4


def _decimal(value: Fraction) -> str:
    den = value.denominator
    twos = fives = 0
    while den % 2 == 0:
        den //= 2
        twos += 1
    while den % 5 == 0:
        den //= 5
        fives += 1
    if den != 1:
        return f"({value.numerator}/{value.denominator})"
    places = max(twos, fives)
    if places == 0:
        return str(value.numerator)
    scaled = abs(value.numerator) * 10**places // value.denominator
    digits = str(scaled).rjust(places + 1, "0")
    sign = "-" if value < 0 else ""
    return f"{sign}{digits[:-places]}.{digits[-places:]}"


def to_text(node: Node) -> str:
    """Render with the fewest parentheses that reparse to the same tree."""
    if isinstance(node, Num):
        text = _decimal(node.value)
        return f"({text})" if node.value < 0 else text
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        inner = to_text(node.operand)
        return "-" + (inner if _prec(node.operand) >= 3 else f"({inner})")
    if isinstance(node, BinOp):
        p = _PREC[node.op]
        left = to_text(node.left)
        right = to_text(node.right)
        if _prec(node.left) < p:
            left = f"({left})"
        if _prec(node.right) <= p:
            right = f"({right})"
        return f"{left}{node.op}{right}"
    if isinstance(node, Call):
        return f"{node.func}({', '.join(to_text(a) for a in node.args)})"
    raise TypeError(node)


# -------------------------------------------------------------------------
# evaluation


def _compile(node: Node, as_float: bool) -> Callable[[dict], object]:
    if isinstance(node, Num):
        v = float(node.value) if as_float else node.value
        return lambda env: v
    if isinstance(node, Var):
        name = node.name
        return lambda env: env[name]
    if isinstance(node, Neg):
        inner = _compile(node.operand, as_float)
        return lambda env: -inner(env)
    if isinstance(node, BinOp):
        a = _compile(node.left, as_float)
        b = _compile(node.right, as_float)
        if node.op == "+":
            return lambda env: a(env) + b(env)
        if node.op == "-":
            return lambda env: a(env) - b(env)
        if node.op == "*":
            return lambda env: a(env) * b(env)

        def divide(env):
            den = b(env)
            if den == 0:
                raise EvaluationError("division by zero")
            return a(env) / den

        return divide
    if isinstance(node, Call):
        args = [_compile(x, as_float) for x in node.args]
        if node.func == "abs":
            (x,) = args
            return lambda env: abs(x(env))
        x, y = args
        if node.func == "min":
            return lambda env: min(x(env), y(env))
        return lambda env: max(x(env), y(env))
    raise TypeError(node)


def _free_vars(node: Node) -> set:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Num):
        return set()
    if isinstance(node, Neg):
        return _free_vars(node.operand)
    if isinstance(node, BinOp):
        return _free_vars(node.left) | _free_vars(node.right)
    return set().union(*(_free_vars(a) for a in node.args))


def _substitute(node: Node, name: str, repl: Node) -> Node:
    if isinstance(node, Var):
        return repl if node.name == name else node
    if isinstance(node, Num):
        return node
    if isinstance(node, Neg):
        return Neg(_substitute(node.operand, name, repl))
    if isinstance(node, BinOp):
        return BinOp(node.op, _substitute(node.left, name, repl), _substitute(node.right, name, repl))
    return Call(node.func, tuple(_substitute(a, name, repl) for a in node.args))


class Expr:
    """A parsed expression bound to its variable context."""

    def __init__(self, root: Node, variables: Iterable[str], text: str = None):
        self.root = root
        self.variables = tuple(sorted(variables))
        self.text = text if text is not None else to_text(root)
        missing = _free_vars(root) - set(self.variables)
        if missing:
            raise ValueError(f"free variables {sorted(missing)} not in context {self.variables}")
        self._exact = _compile(root, as_float=False)
        self._float = _compile(root, as_float=True)

    def __call__(self, **env):
        return self.evaluate(env)

    def evaluate(self, env: dict):
        fn = self._float if any(isinstance(v, float) for v in env.values()) else self._exact
        try:
            return fn(env)
        except ZeroDivisionError as exc:
            raise EvaluationError(f"division by zero in {self.text!r}") from exc

    def substitute(self, name: str, other: "Expr") -> "Expr":
        variables = (set(self.variables) - {name}) | set(other.variables)
        return Expr(_substitute(self.root, name, other.root), variables)

    def __eq__(self, other):
        return isinstance(other, Expr) and self.root == other.root

    def __hash__(self):
        return hash(self.root)

    def __repr__(self):
        return f"Expr({self.text!r})"

    def __str__(self):
        return self.text


def parse_expression(text: str, context: Iterable[str]) -> Expr:
    """Parse ``text`` allowing only the variables in ``context``."""
    if not text or not text.strip():
        raise ParseError("empty expression", text or "", 0)
    variables = frozenset(context)
    root = _Parser(text, variables).parse()
    return Expr(root, variables, text)

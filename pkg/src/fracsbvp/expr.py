"""A small arithmetic expression language for problem data.

Grammar, loosest binding first::

    expr    := expr ('+' | '-') term
    term    := term ('*' | '/') unary
    unary   := '-' unary | power
    power   := atom '^' unary          (right associative)
    atom    := number | name | name '(' expr {',' expr} ')' | '(' expr ')'

So ``-2^2 == -4``, ``2^3^2 == 512`` and ``x^-0.9`` is allowed.  Evaluation
is vectorised over numpy arrays and refuses to produce values outside the
real domain instead of returning ``nan``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import EvaluationDomainError, LexError, ParseError, UnboundIdentifierError
from .numerics import gamma

__all__ = [
    "Const", "Var", "Neg", "BinOp", "Call", "Node",
    "tokenize", "parse", "evaluate", "to_source", "free_variables", "FUNCTIONS",
]


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Node"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple


Node = Union[Const, Var, Neg, BinOp, Call]

# name -> (min args, max args)
FUNCTIONS = {
    "abs": (1, 1),
    "exp": (1, 1),
    "log": (1, 1),
    "gammafn": (1, 1),
    "min": (2, None),
    "max": (2, None),
}

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^(),])
""", re.VERBOSE)


@dataclass(frozen=True)
class Token:
    kind: str  # "num", "name", "op", "end"
    text: str
    pos: int


def tokenize(src: str) -> list[Token]:
    """Split ``src`` into tokens; the list always ends with an ``end`` token."""
    out = []
    pos = 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None:
            raise LexError(f"unexpected character {src[pos]!r}", pos)
        if m.lastgroup != "ws":
            out.append(Token(m.lastgroup, m.group(), pos))
        pos = m.end()
    out.append(Token("end", "", len(src)))
    return out


_BINARY = {"+": (1, "left"), "-": (1, "left"), "*": (2, "left"), "/": (2, "left"),
           "^": (4, "right")}
_UNARY_PREC = 3


class _Parser:
    def __init__(self, src: str):
        self.toks = tokenize(src)
        self.i = 0

    def peek(self) -> Token:
        return self.toks[self.i]

    def take(self) -> Token:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, text: str):
        tok = self.take()
        if tok.text != text:
            found = tok.text or "end of input"
            raise ParseError(f"expected {text!r}, found {found!r}", tok.pos)

    def expression(self, min_prec: int = 1) -> Node:
        lhs = self.unary()
        while True:
            tok = self.peek()
            if tok.kind != "op" or tok.text not in _BINARY:
                return lhs
            prec, assoc = _BINARY[tok.text]
            if prec < min_prec:
                return lhs
            self.take()
            if tok.text == "^":
                rhs = self.unary_power_rhs()
            else:
                rhs = self.expression(prec + 1 if assoc == "left" else prec)
            lhs = BinOp(tok.text, lhs, rhs)

    def unary_power_rhs(self) -> Node:
        # exponent: a signed power, so 2^-1^2 == 2^(-(1^2))
        if self.peek().text == "-":
            self.take()
            return Neg(self.unary_power_rhs())
        return self.power()

    def unary(self) -> Node:
        if self.peek().text == "-":
            self.take()
            return Neg(self.expression(_UNARY_PREC))
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.peek().text == "^":
            self.take()
            return BinOp("^", base, self.unary_power_rhs())
        return base

    def atom(self) -> Node:
        tok = self.take()
        if tok.kind == "num":
            value = float(tok.text)
            if not np.isfinite(value):
                raise ParseError(f"numeric literal {tok.text!r} overflows", tok.pos)
            return Const(value)
        if tok.kind == "name":
            if self.peek().text == "(":
                return self.call(tok)
            return Var(tok.text)
        if tok.text == "(":
            inner = self.expression()
            self.expect(")")
            return inner
        found = tok.text or "end of input"
        raise ParseError(f"unexpected {found!r}", tok.pos)

    def call(self, name: Token) -> Node:
        if name.text not in FUNCTIONS:
            raise ParseError(f"unknown function {name.text!r}", name.pos)
        self.expect("(")
        args = [self.expression()]
        while self.peek().text == ",":
            self.take()
            args.append(self.expression())
        self.expect(")")
        lo, hi = FUNCTIONS[name.text]
        if len(args) < lo or (hi is not None and len(args) > hi):
            raise ParseError(f"{name.text} takes {lo}{'+' if hi is None else ''} "
                             f"argument(s), got {len(args)}", name.pos)
        return Call(name.text, tuple(args))


def parse(src: str) -> Node:
    """Parse ``src`` into an expression tree.

    Raises
    ------
    LexError, ParseError
        With the character position of the offending token.
    """
    p = _Parser(src)
    tree = p.expression()
    tok = p.peek()
    if tok.kind != "end":
        raise ParseError(f"unexpected {tok.text!r}", tok.pos)
    return tree


def to_source(node: Node) -> str:
    """Print ``node`` so that ``parse(to_source(node)) == node``."""
    if isinstance(node, Const):
        return repr(float(node.value))
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Neg):
        return f"(-{to_source(node.operand)})"
    if isinstance(node, BinOp):
        return f"({to_source(node.left)} {node.op} {to_source(node.right)})"
    if isinstance(node, Call):
        return f"{node.func}({', '.join(to_source(a) for a in node.args)})"
    raise TypeError(f"not an expression node: {node!r}")


def free_variables(node: Node) -> set[str]:
    if isinstance(node, Var):
        return {node.name}
    if isinstance(node, Neg):
        return free_variables(node.operand)
    if isinstance(node, BinOp):
        return free_variables(node.left) | free_variables(node.right)
    if isinstance(node, Call):
        return set().union(*(free_variables(a) for a in node.args))
    return set()


class _Eval:
    def __init__(self, env: dict):
        self.env = {k: np.asarray(v, dtype=float) for k, v in env.items()}

    def fail(self, message: str, bad):
        bad = np.broadcast_to(bad, np.broadcast_shapes(bad.shape, *(v.shape for v in self.env.values())))
        idx = np.unravel_index(int(np.argmax(bad)), bad.shape) if bad.ndim else ()
        point = {k: float(np.broadcast_to(v, bad.shape)[idx]) for k, v in self.env.items()}
        raise EvaluationDomainError(message, point)

    def __call__(self, node):
        if isinstance(node, Const):
            return np.float64(node.value)
        if isinstance(node, Var):
            try:
                return self.env[node.name]
            except KeyError:
                raise UnboundIdentifierError(f"unbound identifier {node.name!r}") from None
        if isinstance(node, Neg):
            return -self(node.operand)
        if isinstance(node, BinOp):
            a, b = self(node.left), self(node.right)
            return self.binary(node.op, a, b)
        if isinstance(node, Call):
            return self.call(node.func, [self(x) for x in node.args])
        raise TypeError(f"not an expression node: {node!r}")

    def binary(self, op, a, b):
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        if op == "/":
            zero = np.asarray(b == 0.0)
            if zero.any():
                self.fail("division by zero", zero)
            return a / b
        a_b, b_b = np.broadcast_arrays(a, b)
        neg_base = (a_b < 0.0) & (b_b != np.floor(b_b))
        if neg_base.any():
            self.fail("negative base with non-integer exponent", neg_base)
        zero_neg = (a_b == 0.0) & (b_b < 0.0)
        if zero_neg.any():
            self.fail("zero raised to a negative power", zero_neg)
        with np.errstate(over="ignore"):
            return np.power(a, b)

    def call(self, name, args):
        if name == "abs":
            return np.abs(args[0])
        if name == "exp":
            with np.errstate(over="ignore"):
                return np.exp(args[0])
        if name == "log":
            bad = np.asarray(args[0] <= 0.0)
            if bad.any():
                self.fail("log of a nonpositive value", bad)
            return np.log(args[0])
        if name == "gammafn":
            bad = np.asarray(args[0] <= 0.0)
            if bad.any():
                self.fail("gammafn of a nonpositive value", bad)
            return gamma(args[0])
        if name == "min":
            return np.minimum.reduce(np.broadcast_arrays(*args))
        if name == "max":
            return np.maximum.reduce(np.broadcast_arrays(*args))
        raise UnboundIdentifierError(f"unknown function {name!r}")


def evaluate(node: Node, env: dict):
    """Evaluate ``node`` with ``env`` mapping names to scalars or arrays.

    Arrays broadcast against each other.  Returns a float for all-scalar
    environments and an ndarray otherwise.

    Raises
    ------
    UnboundIdentifierError
        For a name missing from ``env``.
    EvaluationDomainError
        For division by zero, ``0^negative``, a negative base with a
        non-integer exponent, or ``log``/``gammafn`` of a nonpositive value.
    """
    out = _Eval(env)(node)
    out = np.asarray(out, dtype=float)
    return float(out) if out.ndim == 0 else out

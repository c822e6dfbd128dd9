"""Scalar coordinate expressions: parsing and evaluation to jets.

Grammar (``^`` binds tighter than unary minus, so ``-r^2 == -(r^2)``)::

    expr  := term (('+' | '-') term)*
    term  := unary (('*' | '/') unary)*
    unary := ('-' | '+') unary | power
    power := atom ('^' unary)?
    atom  := NUMBER | NAME | FUNC '(' expr ')' | '(' expr ')'

``pi`` is a built-in constant.  There is no implicit multiplication: a
number glued to a name (``2M``) is reported as an unknown identifier.
Error offsets are 1-based character positions; end of input is
``len(text) + 1``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ExprSyntaxError, UnboundParameterError, UnknownIdentifierError
from .jets import Jet3, jet_apply, jet_constant, jet_pow_const, jet_recip, jet_seed

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt")
BINARY = ("add", "sub", "mul", "div", "pow")
CONSTANTS = {"pi": math.pi}


@dataclass(frozen=True)
class ExprAst:
    kind: str
    value: object = None
    children: tuple = ()

    def __str__(self):
        return to_text(self)


def const(x):
    return ExprAst("const", float(x))


def to_text(node: ExprAst) -> str:
    k = node.kind
    if k == "const":
        return repr(node.value)
    if k == "coord":
        return f"x{node.value}"
    if k in ("param", "name"):
        return str(node.value)
    if k == "neg":
        return f"(-{to_text(node.children[0])})"
    if k in FUNCTIONS:
        return f"{k}({to_text(node.children[0])})"
    sym = {"add": "+", "sub": "-", "mul": "*", "div": "/", "pow": "^"}[k]
    a, b = node.children
    return f"({to_text(a)} {sym} {to_text(b)})"


_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos + 1, text)
        kind = m.lastgroup
        start = m.start(kind)
        if kind == "num" and m.end() < len(text) and (text[m.end()].isalpha() or text[m.end()] == "_"):
            # no implicit multiplication: "2M" is one bad identifier
            glued = re.match(r"[A-Za-z_0-9.]+", text[start:]).group(0)
            raise UnknownIdentifierError(glued, start + 1)
        tokens.append((kind, m.group(kind), start + 1))
        pos = m.end()
    tokens.append(("end", None, len(text) + 1))
    return tokens


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, msg, tok=None):
        tok = tok or self.peek()
        raise ExprSyntaxError(msg, tok[2], self.text)

    def expect(self, op):
        tok = self.peek()
        if tok[0] != "op" or tok[1] != op:
            what = "end of input" if tok[0] == "end" else repr(tok[1])
            self.fail(f"expected {op!r}, found {what}")
        return self.take()

    def parse(self):
        node = self.expr()
        if self.peek()[0] != "end":
            self.fail(f"unexpected token {self.peek()[1]!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.take()[1]
            node = ExprAst("add" if op == "+" else "sub", None, (node, self.term()))
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.take()[1]
            node = ExprAst("mul" if op == "*" else "div", None, (node, self.unary()))
        return node

    def unary(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "-":
            self.take()
            return ExprAst("neg", None, (self.unary(),))
        if tok[0] == "op" and tok[1] == "+":
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.take()
            return ExprAst("pow", None, (base, self.unary()))
        return base

    def atom(self):
        tok = self.take()
        kind, text, offset = tok
        if kind == "num":
            return ExprAst("const", float(text))
        if kind == "name":
            nxt = self.peek()
            if nxt[0] == "op" and nxt[1] == "(":
                self.take()
                arg = self.expr()
                self.expect(")")
                return ExprAst("call", (text, offset), (arg,))
            return ExprAst("name", (text, offset))
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")")
            return node
        if kind == "end":
            self.fail("unexpected end of input", tok)
        self.fail(f"unexpected token {text!r}", tok)


def _resolve(node, coords, params):
    if node.kind == "name":
        name, offset = node.value
        if name in coords:
            return ExprAst("coord", coords.index(name))
        if name in params:
            return ExprAst("param", name)
        if name in CONSTANTS:
            return ExprAst("const", CONSTANTS[name])
        raise UnknownIdentifierError(name, offset)
    if node.kind == "call":
        name, offset = node.value
        if name not in FUNCTIONS:
            raise UnknownIdentifierError(name, offset)
        return ExprAst(name, None, (_resolve(node.children[0], coords, params),))
    if not node.children:
        return node
    return ExprAst(node.kind, node.value, tuple(_resolve(c, coords, params) for c in node.children))


def parse_expression(text: str, coords=(), params=()) -> ExprAst:
    """Parse ``text``; identifiers must name a coordinate, a parameter or ``pi``.

    Syntax is checked over the whole input before identifiers are resolved.
    """
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 1, text or "")
    tree = _Parser(text).parse()
    return _resolve(tree, list(coords), list(params))


def coordinates_used(node: ExprAst) -> set:
    if node.kind == "coord":
        return {node.value}
    out = set()
    for c in node.children:
        out |= coordinates_used(c)
    return out


def substitute_coordinate(node: ExprAst, index: int, value: float, remap=None) -> ExprAst:
    """Replace coordinate ``index`` by a constant; renumber the others via ``remap``."""
    if node.kind == "coord":
        if node.value == index:
            return const(value)
        if remap is not None:
            return ExprAst("coord", remap[node.value])
        return node
    if not node.children:
        return node
    return ExprAst(node.kind, node.value,
                   tuple(substitute_coordinate(c, index, value, remap) for c in node.children))


def parameters_used(node: ExprAst) -> set:
    if node.kind == "param":
        return {node.value}
    out = set()
    for c in node.children:
        out |= parameters_used(c)
    return out


def _const_value(node, params):
    """Float value of a coordinate-free subtree, else None."""
    if node.kind == "const":
        return node.value
    if node.kind == "param":
        return float(params[node.value]) if node.value in params else None
    if node.kind == "coord":
        return None
    vals = [_const_value(c, params) for c in node.children]
    if any(v is None for v in vals):
        return None
    try:
        if node.kind == "neg":
            return -vals[0]
        if node.kind == "add":
            return vals[0] + vals[1]
        if node.kind == "sub":
            return vals[0] - vals[1]
        if node.kind == "mul":
            return vals[0] * vals[1]
        if node.kind == "div":
            return vals[0] / vals[1]
        if node.kind == "pow":
            return vals[0] ** vals[1]
        return getattr(math, node.kind)(vals[0])
    except (ZeroDivisionError, ValueError, OverflowError):
        return None


def _eval(node, point, params, order, n):
    k = node.kind
    if k == "const":
        return jet_constant(node.value, n, order)
    if k == "coord":
        return jet_seed(node.value, point, order)
    if k == "param":
        return jet_constant(float(params[node.value]), n, order)
    if k == "neg":
        return -_eval(node.children[0], point, params, order, n)
    if k in FUNCTIONS:
        arg = _eval(node.children[0], point, params, order, n)
        try:
            return jet_apply(k, arg)
        except DomainError as exc:
            raise DomainError(f"{exc.args[0]} in {to_text(node)}", node, point) from None
    if k == "pow":
        base_node, exp_node = node.children
        base = _eval(base_node, point, params, order, n)
        q = _const_value(exp_node, params)
        try:
            if q is not None:
                return jet_pow_const(base, q)
            if base.value <= 0.0:
                raise DomainError("variable exponent needs a positive base")
            expo = _eval(exp_node, point, params, order, n)
            return jet_apply("exp", expo * jet_apply("log", base))
        except DomainError as exc:
            raise DomainError(f"{exc.args[0]} in {to_text(node)}", node, point) from None
    a = _eval(node.children[0], point, params, order, n)
    b = _eval(node.children[1], point, params, order, n)
    if k == "add":
        return a + b
    if k == "sub":
        return a - b
    if k == "mul":
        return a * b
    if k == "div":
        if b.value == 0.0:
            raise DomainError(f"division by zero in {to_text(node)}", node, point)
        return a * jet_recip(b)
    raise ValueError(f"unknown node kind {k!r}")


def eval_jet(ast: ExprAst, point, param_values=None, order: int = 3) -> Jet3:
    """Taylor coefficients of ``ast`` at ``point`` through ``order``."""
    point = np.asarray(point, dtype=float)
    if not np.all(np.isfinite(point)):
        raise DomainError("non-finite evaluation point", ast, point)
    params = param_values or {}
    for name in parameters_used(ast):
        if name not in params:
            raise UnboundParameterError(name)
    with np.errstate(over="raise", invalid="raise"):
        try:
            jet = _eval(ast, point, params, order, point.shape[0])
        except FloatingPointError as exc:
            raise DomainError(f"floating point failure ({exc})", ast, point) from None
        except OverflowError as exc:
            raise DomainError(f"overflow ({exc})", ast, point) from None
    if not np.all(np.isfinite(jet.coeffs)):
        raise DomainError(f"non-finite result for {to_text(ast)}", ast, point)
    return jet

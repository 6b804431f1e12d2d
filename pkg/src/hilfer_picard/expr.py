"""Arithmetic expression language for right-hand sides ``f(t, x)``.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-' factor | power
    power  := atom ('^' factor)?
    atom   := NUMBER | 't' | 'x' | FUNC '(' expr ')' | '(' expr ')'

``^`` binds tighter than unary minus and is right associative, so ``-2^2``
is ``-4`` and ``2^3^2`` is ``512``. A negative base with a non-integer
exponent is a domain error rather than a silently chosen branch: write
``x^(4/3)`` over negative ``x`` as ``(x^4)^(1/3)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import ExprDomainError, ExprLexError, ExprSyntaxError

__all__ = [
    "Token",
    "Num",
    "Var",
    "Unary",
    "Binary",
    "Call",
    "Expr",
    "FUNCTIONS",
    "tokenize",
    "parse",
    "compile_expr",
    "evaluate",
    "to_source",
]

FUNCTIONS = ("sin", "cos", "exp", "log", "abs", "sqrt")
VARIABLES = ("t", "x")


@dataclass(frozen=True)
class Token:
    kind: str  # "num", "ident", "op", "end"
    text: str
    pos: int

    def __repr__(self) -> str:
        return f"Token({self.kind}, {self.text!r}, {self.pos})"


_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
    """,
    re.VERBOSE,
)


def tokenize(src: str) -> list[Token]:
    if not src or not src.strip():
        raise ExprLexError("empty expression", 0)
    tokens = []
    pos = 0
    while pos < len(src):
        m = _TOKEN_RE.match(src, pos)
        if m is None:
            raise ExprLexError(f"unexpected character {src[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append(Token(kind, m.group(), pos))
        pos = m.end()
    tokens.append(Token("end", "", len(src)))
    return tokens


# --- AST -------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Num, Var, Unary, Binary, Call]


class _Parser:
    def __init__(self, tokens: list[Token]) -> None:
        self.tokens = tokens
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.i]

    def _fail(self, expected: set[str]):
        tok = self.tok
        found = "end of input" if tok.kind == "end" else repr(tok.text)
        raise ExprSyntaxError(f"unexpected {found}", tok.pos, frozenset(expected))

    def _accept(self, *ops: str) -> str | None:
        tok = self.tok
        if tok.kind == "op" and tok.text in ops:
            self.i += 1
            return tok.text
        return None

    def _expect(self, op: str) -> None:
        if self._accept(op) is None:
            self._fail({op})

    def parse(self) -> Expr:
        node = self.expr()
        if self.tok.kind != "end":
            self._fail({"+", "-", "*", "/", "^", "end of input"})
        return node

    def expr(self) -> Expr:
        node = self.term()
        while (op := self._accept("+", "-")) is not None:
            node = Binary(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.factor()
        while (op := self._accept("*", "/")) is not None:
            node = Binary(op, node, self.factor())
        return node

    def factor(self) -> Expr:
        if self._accept("-") is not None:
            return Unary("-", self.factor())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self._accept("^") is not None:
            return Binary("^", base, self.factor())
        return base

    def atom(self) -> Expr:
        tok = self.tok
        if tok.kind == "num":
            self.i += 1
            return Num(float(tok.text))
        if tok.kind == "ident":
            if tok.text in VARIABLES:
                self.i += 1
                return Var(tok.text)
            if tok.text in FUNCTIONS:
                self.i += 1
                self._expect("(")
                arg = self.expr()
                self._expect(")")
                return Call(tok.text, arg)
            raise ExprSyntaxError(
                f"unknown identifier {tok.text!r}", tok.pos, frozenset(VARIABLES + FUNCTIONS)
            )
        if self._accept("(") is not None:
            node = self.expr()
            self._expect(")")
            return node
        self._fail({"number", "t", "x", "function", "(", "-"})


def parse(tokens: list[Token] | str) -> Expr:
    """Build an AST from a token list (or directly from source text)."""
    if isinstance(tokens, str):
        tokens = tokenize(tokens)
    return _Parser(tokens).parse()


# --- printing --------------------------------------------------------------

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}
_ATOM = 5


def _prec(node: Expr) -> int:
    if isinstance(node, Binary):
        return _PREC[node.op]
    if isinstance(node, Unary):
        return _PREC["neg"]
    return _ATOM


def _num_text(value: float) -> str:
    text = repr(float(value))
    if text in ("inf", "nan"):
        raise ValueError(f"cannot print non-finite literal {value!r}")
    return text


def to_source(node: Expr, minimal: bool = True) -> str:
    """Render an AST as source text that parses back to the same tree.

    With ``minimal=False`` every compound subexpression is parenthesized.
    """

    def wrap(child: Expr, need: bool) -> str:
        text = to_source(child, minimal)
        return f"({text})" if need else text

    if isinstance(node, Num):
        return _num_text(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({to_source(node.arg, minimal)})"
    if isinstance(node, Unary):
        child = node.operand
        return "-" + wrap(child, (not minimal and _prec(child) != _ATOM) or _prec(child) < _PREC["neg"])
    if isinstance(node, Binary):
        p = _PREC[node.op]
        if not minimal:
            left = wrap(node.left, _prec(node.left) != _ATOM)
            right = wrap(node.right, _prec(node.right) != _ATOM)
        elif node.op == "^":
            left = wrap(node.left, _prec(node.left) != _ATOM)
            right = wrap(node.right, _prec(node.right) < _PREC["neg"])
        else:
            left = wrap(node.left, _prec(node.left) < p)
            right = wrap(node.right, _prec(node.right) <= p)
        return f"{left}{node.op}{right}"
    raise TypeError(f"not an expression node: {node!r}")


# --- evaluation ------------------------------------------------------------


def _first_bad(mask: np.ndarray, t: np.ndarray, x: np.ndarray) -> tuple[float, float]:
    mask, tt, xx = np.broadcast_arrays(mask, t, x)
    idx = np.unravel_index(int(np.argmax(mask)), mask.shape) if mask.ndim else ()
    return float(tt[idx]), float(xx[idx])


def _eval(node: Expr, t: np.ndarray, x: np.ndarray) -> np.ndarray:
    if isinstance(node, Num):
        return np.asarray(node.value)
    if isinstance(node, Var):
        return t if node.name == "t" else x
    if isinstance(node, Unary):
        return -_eval(node.operand, t, x)

    def domain(reason: str, mask: np.ndarray):
        bt, bx = _first_bad(mask, t, x)
        raise ExprDomainError(reason, to_source(node), bt, bx)

    if isinstance(node, Call):
        v = _eval(node.arg, t, x)
        if node.func == "log":
            bad = v <= 0
            if np.any(bad):
                domain("log of non-positive value", bad)
            out = np.log(v)
        elif node.func == "sqrt":
            bad = v < 0
            if np.any(bad):
                domain("sqrt of negative value", bad)
            out = np.sqrt(v)
        else:
            out = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "abs": np.abs}[node.func](v)
    else:
        lhs = _eval(node.left, t, x)
        rhs = _eval(node.right, t, x)
        op = node.op
        if op == "+":
            out = lhs + rhs
        elif op == "-":
            out = lhs - rhs
        elif op == "*":
            out = lhs * rhs
        elif op == "/":
            bad = np.broadcast_to(rhs == 0, np.broadcast(lhs, rhs).shape)
            if np.any(bad):
                domain("division by zero", bad)
            out = lhs / rhs
        else:
            shape = np.broadcast(lhs, rhs).shape
            neg_frac = np.broadcast_to((lhs < 0) & (rhs != np.round(rhs)), shape)
            if np.any(neg_frac):
                domain("negative base with non-integer exponent", neg_frac)
            zero_neg = np.broadcast_to((lhs == 0) & (rhs < 0), shape)
            if np.any(zero_neg):
                domain("zero raised to a negative power", zero_neg)
            out = np.power(lhs, rhs)
    finite = np.isfinite(out)
    if not np.all(finite):
        domain("non-finite result", ~np.broadcast_to(finite, np.shape(out)))
    return out


def evaluate(node: Expr, t, x):
    """Evaluate ``node`` at ``(t, x)``; arrays broadcast elementwise.

    Raises :class:`ExprDomainError` naming the offending subexpression and the
    first offending ``(t, x)`` instead of returning nan or inf.
    """
    t_arr = np.asarray(t, dtype=float)
    x_arr = np.asarray(x, dtype=float)
    with np.errstate(all="ignore"):
        out = _eval(node, t_arr, x_arr)
    out = np.broadcast_to(out, np.broadcast(t_arr, x_arr).shape)
    if out.ndim == 0:
        return float(out)
    return np.array(out, dtype=float)


def compile_expr(src: str) -> Expr:
    """Tokenize and parse ``src`` in one call."""
    return parse(tokenize(src))

"""Boolean constraint expressions over dimension representative values.

Grammar (highest binding last):

    or    := and ('||' and)*
    and   := cmp ('&&' cmp)*
    cmp   := sum (('<'|'<='|'>'|'>='|'=='|'!=') sum)?
    sum   := term (('+'|'-') term)*
    term  := unary (('*'|'/') unary)*
    unary := ('-'|'!') unary | atom
    atom  := number | ident | func '(' args ')' | '(' or ')'

Functions: ln (alias log), exp, abs (one argument), min, max (two).
Evaluation is strict — both sides of && and || are always evaluated — so
the scalar and batch evaluators agree exactly, and a domain error can
never be masked by short-circuiting.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Mapping, Union

import numpy as np

from .errors import EvalError, ExprError
from .spec import Diagnostic

# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Ident:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str  # '-' | '!'
    operand: "Node"


@dataclass(frozen=True)
class Binary:
    op: str  # '+' '-' '*' '/'
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Compare:
    op: str  # '<' '<=' '>' '>=' '==' '!='
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Logic:
    op: str  # '&&' '||'
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    func: str  # 'ln' 'exp' 'abs' 'min' 'max'
    args: tuple["Node", ...]


Node = Union[Num, Ident, Unary, Binary, Compare, Logic, Call]

_FUNCTIONS = {"ln": 1, "exp": 1, "abs": 1, "min": 2, "max": 2}
_ALIASES = {"log": "ln"}


# ---------------------------------------------------------------------------
# lexer

_TOKEN_RE = re.compile(r"""
    (?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][-+]?\d+)?)
  | (?P<ident>[A-Za-z_]\w*)
  | (?P<op><=|>=|==|!=|&&|\|\||[-+*/<>!(),])
  | (?P<ws>\s+)
""", re.VERBOSE)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ExprError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, text, pos = self.peek()
        if text != value:
            what = "end of input" if kind == "eof" else repr(text)
            raise ExprError(f"expected {value!r}, found {what}", pos)
        return self.advance()

    def parse(self) -> Node:
        node = self.or_expr()
        kind, text, pos = self.peek()
        if kind != "eof":
            raise ExprError(f"unexpected token {text!r}", pos)
        return node

    def or_expr(self) -> Node:
        node = self.and_expr()
        while self.peek()[1] == "||":
            self.advance()
            node = Logic("||", node, self.and_expr())
        return node

    def and_expr(self) -> Node:
        node = self.cmp_expr()
        while self.peek()[1] == "&&":
            self.advance()
            node = Logic("&&", node, self.cmp_expr())
        return node

    def cmp_expr(self) -> Node:
        node = self.sum_expr()
        if self.peek()[1] in ("<", "<=", ">", ">=", "==", "!="):
            op = self.advance()[1]
            node = Compare(op, node, self.sum_expr())
        return node

    def sum_expr(self) -> Node:
        node = self.term_expr()
        while self.peek()[1] in ("+", "-"):
            op = self.advance()[1]
            node = Binary(op, node, self.term_expr())
        return node

    def term_expr(self) -> Node:
        node = self.unary_expr()
        while self.peek()[1] in ("*", "/"):
            op = self.advance()[1]
            node = Binary(op, node, self.unary_expr())
        return node

    def unary_expr(self) -> Node:
        if self.peek()[1] in ("-", "!"):
            op = self.advance()[1]
            return Unary(op, self.unary_expr())
        return self.atom()

    def atom(self) -> Node:
        kind, text, pos = self.peek()
        if kind == "num":
            self.advance()
            return Num(float(text))
        if kind == "ident":
            self.advance()
            if self.peek()[1] == "(":
                name = _ALIASES.get(text, text)
                if name not in _FUNCTIONS:
                    raise ExprError(f"unknown function '{text}'", pos)
                self.advance()
                args = [self.or_expr()]
                while self.peek()[1] == ",":
                    self.advance()
                    args.append(self.or_expr())
                self.expect(")")
                if len(args) != _FUNCTIONS[name]:
                    raise ExprError(
                        f"function '{text}' takes {_FUNCTIONS[name]} argument(s), got {len(args)}", pos)
                return Call(name, tuple(args))
            return Ident(text)
        if text == "(":
            self.advance()
            node = self.or_expr()
            self.expect(")")
            return node
        what = "end of input" if kind == "eof" else repr(text)
        raise ExprError(f"unexpected {what}", pos)


def parse_expr(text: str) -> Node:
    """Parse constraint source text into an AST; raises ExprError with offset."""
    return _Parser(text).parse()


# ---------------------------------------------------------------------------
# static checks


def check_expr(expr: Node, names: Iterable[str]) -> list[Diagnostic]:
    """Resolve identifiers against dimension names and type-check.

    Empty result iff every identifier is known, comparison/arithmetic
    children are numeric, logic children are boolean, and the root is
    boolean.
    """
    known = set(names)
    out: list[Diagnostic] = []

    def typeof(node: Node) -> str:  # 'num' | 'bool' | 'invalid'
        if isinstance(node, Num):
            return "num"
        if isinstance(node, Ident):
            if node.name not in known:
                out.append(Diagnostic("error", f"unknown identifier '{node.name}'", "expression"))
                return "invalid"
            return "num"
        if isinstance(node, Unary):
            t = typeof(node.operand)
            want = "num" if node.op == "-" else "bool"
            if t not in (want, "invalid"):
                out.append(Diagnostic("error", f"operator '{node.op}' needs a {want} operand", "expression"))
            return want
        if isinstance(node, Binary):
            for child in (node.left, node.right):
                if typeof(child) == "bool":
                    out.append(Diagnostic("error", f"operator '{node.op}' needs numeric operands", "expression"))
            return "num"
        if isinstance(node, Compare):
            for child in (node.left, node.right):
                if typeof(child) == "bool":
                    out.append(Diagnostic("error", f"comparison '{node.op}' needs numeric operands", "expression"))
            return "bool"
        if isinstance(node, Logic):
            for child in (node.left, node.right):
                if typeof(child) == "num":
                    out.append(Diagnostic("error", f"operator '{node.op}' needs boolean operands", "expression"))
            return "bool"
        if isinstance(node, Call):
            for arg in node.args:
                if typeof(arg) == "bool":
                    out.append(Diagnostic("error", f"function '{node.func}' needs numeric arguments", "expression"))
            return "num"
        raise TypeError(f"not an expression node: {node!r}")

    if typeof(expr) == "num":
        out.append(Diagnostic("error", "constraint must be boolean at the top level", "expression"))
    return out


def identifiers(expr: Node) -> set[str]:
    if isinstance(expr, Ident):
        return {expr.name}
    if isinstance(expr, Unary):
        return identifiers(expr.operand)
    if isinstance(expr, (Binary, Compare, Logic)):
        return identifiers(expr.left) | identifiers(expr.right)
    if isinstance(expr, Call):
        names: set[str] = set()
        for a in expr.args:
            names |= identifiers(a)
        return names
    return set()


# ---------------------------------------------------------------------------
# evaluation


def eval_value(expr: Node, env: Mapping[str, float]):
    """Evaluate a node over scalars; numeric nodes give float, boolean bool."""
    if isinstance(expr, Num):
        return expr.value
    if isinstance(expr, Ident):
        return float(env[expr.name])
    if isinstance(expr, Unary):
        v = eval_value(expr.operand, env)
        return -v if expr.op == "-" else (not v)
    if isinstance(expr, Binary):
        a = eval_value(expr.left, env)
        b = eval_value(expr.right, env)
        if expr.op == "+":
            return a + b
        if expr.op == "-":
            return a - b
        if expr.op == "*":
            return a * b
        if b == 0.0:
            raise EvalError("division by zero")
        return a / b
    if isinstance(expr, Compare):
        a = eval_value(expr.left, env)
        b = eval_value(expr.right, env)
        return {"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b,
                "==": a == b, "!=": a != b}[expr.op]
    if isinstance(expr, Logic):
        a = eval_value(expr.left, env)
        b = eval_value(expr.right, env)
        return (a and b) if expr.op == "&&" else (a or b)
    if isinstance(expr, Call):
        args = [eval_value(a, env) for a in expr.args]
        if expr.func == "ln":
            if args[0] <= 0.0:
                raise EvalError(f"ln of non-positive value {args[0]}")
            return math.log(args[0])
        if expr.func == "exp":
            try:
                return math.exp(args[0])
            except OverflowError:  # match IEEE/vectorized semantics
                return math.inf
        if expr.func == "abs":
            return abs(args[0])
        if expr.func == "min":
            return min(args)
        return max(args)
    raise TypeError(f"not an expression node: {expr!r}")


def eval_expr(expr: Node, env: Mapping[str, float]) -> bool:
    """Boolean verdict of a type-correct constraint at one environment."""
    result = eval_value(expr, env)
    if not isinstance(result, bool):
        raise EvalError("constraint did not evaluate to a boolean")
    return result


def eval_expr_batch(expr: Node, env: Mapping[str, np.ndarray]) -> np.ndarray:
    """Vectorized twin of eval_expr; one verdict per environment row.

    Domain errors carry the offending row in EvalError.position so the
    caller can name the exact combination. Constant expressions broadcast
    to the environment's row count.
    """
    size = max((len(v) for v in env.values()), default=1)

    def ev(node: Node):
        if isinstance(node, Num):
            return node.value
        if isinstance(node, Ident):
            return env[node.name]
        if isinstance(node, Unary):
            v = ev(node.operand)
            return -v if node.op == "-" else np.logical_not(v)
        if isinstance(node, Binary):
            a = ev(node.left)
            b = ev(node.right)
            if node.op == "+":
                return a + b
            if node.op == "-":
                return a - b
            if node.op == "*":
                return a * b
            bad = np.asarray(b == 0.0)
            if bad.any():
                raise EvalError("division by zero", position=int(np.argmax(bad)))
            return a / b
        if isinstance(node, Compare):
            a = ev(node.left)
            b = ev(node.right)
            return {"<": np.less, "<=": np.less_equal, ">": np.greater,
                    ">=": np.greater_equal, "==": np.equal, "!=": np.not_equal}[node.op](a, b)
        if isinstance(node, Logic):
            a = ev(node.left)
            b = ev(node.right)
            return np.logical_and(a, b) if node.op == "&&" else np.logical_or(a, b)
        if isinstance(node, Call):
            args = [ev(a) for a in node.args]
            if node.func == "ln":
                bad = np.asarray(args[0] <= 0.0)
                if bad.any():
                    raise EvalError("ln of non-positive value", position=int(np.argmax(bad)))
                return np.log(args[0])
            if node.func == "exp":
                return np.exp(args[0])
            if node.func == "abs":
                return np.abs(args[0])
            if node.func == "min":
                return np.minimum(args[0], args[1])
            return np.maximum(args[0], args[1])
        raise TypeError(f"not an expression node: {node!r}")

    with np.errstate(over="ignore", invalid="ignore"):
        result = np.asarray(ev(expr), dtype=bool)
    if result.ndim == 0:
        result = np.broadcast_to(result, (size,)).copy()
    return result


# ---------------------------------------------------------------------------
# printing


def pretty_print(expr: Node) -> str:
    """Fully parenthesized source text; parse(pretty_print(e)) == e."""
    if isinstance(expr, Num):
        return repr(expr.value)
    if isinstance(expr, Ident):
        return expr.name
    if isinstance(expr, Unary):
        return f"{expr.op}({pretty_print(expr.operand)})"
    if isinstance(expr, (Binary, Compare, Logic)):
        return f"({pretty_print(expr.left)} {expr.op} {pretty_print(expr.right)})"
    if isinstance(expr, Call):
        return f"{expr.func}({', '.join(pretty_print(a) for a in expr.args)})"
    raise TypeError(f"not an expression node: {expr!r}")

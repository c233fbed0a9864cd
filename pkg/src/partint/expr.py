"""Textual scalar expressions on phase space.

Grammar::

    expr   := term (("+" | "-") term)*
    term   := factor (("*" | "/") factor)*
    factor := base ("^" factor)?
    base   := number | symbol | func "(" expr ")" | "(" expr ")" | "-" base

with ``func`` one of ``sin cos tan atan exp log sqrt``.  Note that unary
minus binds tighter than ``^`` (``-x^2`` is ``(-x)^2``), as the grammar says.

Integer literals are kept as exact :class:`fractions.Fraction` values so that
:mod:`partint.polyalg` can import coefficients losslessly; decimal literals
become floats.  Expressions compile to straight-line Python functions that
accept floats or :class:`partint.dual.Jet` values, which is how exact first
(and second) derivatives are obtained.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence, Union

import numpy as np

from partint.dual import Jet
from partint.errors import DomainError, ParseError, UnboundSymbol, UnknownFunction

FUNCTIONS = ("sin", "cos", "tan", "atan", "exp", "log", "sqrt")
NAME_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*\Z")

Number = Union[int, float, Fraction]


# --------------------------------------------------------------------------
# AST


@dataclass(frozen=True, slots=True)
class Const:
    value: Fraction | float


@dataclass(frozen=True, slots=True)
class Sym:
    name: str


@dataclass(frozen=True, slots=True)
class Neg:
    arg: "Node"


@dataclass(frozen=True, slots=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "Node"
    right: "Node"


@dataclass(frozen=True, slots=True)
class Call:
    func: str
    arg: "Node"


Node = Union[Const, Sym, Neg, BinOp, Call]

ZERO = Const(Fraction(0))
ONE = Const(Fraction(1))


def _children(node):
    if isinstance(node, BinOp):
        return (node.left, node.right)
    if isinstance(node, (Neg, Call)):
        return (node.arg,)
    return ()


def _walk(node):
    """Pre-order, left-to-right traversal without recursion limits."""
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(_children(n)))


def constant_value(node) -> Fraction | float | None:
    """Fold a symbol-free subtree into a number, exactly where possible."""
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Sym):
        return None
    if isinstance(node, Neg):
        v = constant_value(node.arg)
        return None if v is None else -v
    if isinstance(node, Call):
        return None
    a, b = constant_value(node.left), constant_value(node.right)
    if a is None or b is None:
        return None
    try:
        if node.op == "+":
            return a + b
        if node.op == "-":
            return a - b
        if node.op == "*":
            return a * b
        if node.op == "/":
            return a / b
        if isinstance(b, Fraction) and b.denominator == 1:
            return a ** int(b)
        return float(a) ** float(b)
    except (ZeroDivisionError, OverflowError, ValueError):
        return None


# --------------------------------------------------------------------------
# parsing

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z][A-Za-z0-9_]*)"
    r"|(?P<op>[-+*/^()]))"
)

_BASE_START = {"number", "symbol", "function", "(", "-"}


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = []  # (kind, text, char offset)
        pos = 0
        while True:
            m = _TOKEN_RE.match(source, pos)
            if m is None or m.end() == pos:
                rest = source[pos:]
                if rest.strip() == "":
                    break
                bad = pos + (len(rest) - len(rest.lstrip()))
                raise ParseError(f"unexpected character {source[bad]!r}", self._bytes(bad))
            kind = m.lastgroup
            self.tokens.append((kind, m.group(kind), m.start(kind)))
            pos = m.end()
        self.tokens.append(("end", "", len(source)))
        self.i = 0

    def _bytes(self, char_offset):
        return len(self.source[:char_offset].encode("utf-8"))

    def peek(self):
        return self.tokens[self.i]

    def advance(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, expected, message=None):
        kind, text, off = self.peek()
        what = "end of input" if kind == "end" else repr(text)
        raise ParseError(message or f"unexpected {what}", self._bytes(off), expected)

    def parse(self):
        node = self.expr()
        if self.peek()[0] != "end":
            self.fail({"+", "-", "*", "/", "^", "end of input"})
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.advance()[1]
            node = BinOp(op, node, self.factor())
        return node

    def factor(self):
        node = self.base()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.advance()
            node = BinOp("^", node, self.factor())
        return node

    def base(self):
        kind, text, off = self.peek()
        if kind == "number":
            self.advance()
            if "." in text or "e" in text or "E" in text:
                return Const(float(text))
            return Const(Fraction(int(text)))
        if kind == "name":
            self.advance()
            is_call = self.peek()[:2] == ("op", "(")
            if text in FUNCTIONS:
                if not is_call:
                    self.fail({"("}, f"function {text!r} must be applied")
                self.advance()
                arg = self.expr()
                self._expect_close()
                return Call(text, arg)
            if is_call:
                raise UnknownFunction(f"unknown function {text!r}", self._bytes(off), FUNCTIONS)
            return Sym(text)
        if kind == "op" and text == "(":
            self.advance()
            node = self.expr()
            self._expect_close()
            return node
        if kind == "op" and text == "-":
            self.advance()
            if self.peek()[0] == "number":
                # a signed literal is a single constant, so printed negatives re-parse unchanged
                return Const(-self.base().value)
            return Neg(self.base())
        self.fail(_BASE_START)

    def _expect_close(self):
        if self.peek()[:2] != ("op", ")"):
            self.fail({")"})
        self.advance()


# --------------------------------------------------------------------------
# printing

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 3}


def _fmt_const(value):
    if isinstance(value, Fraction):
        if value.denominator == 1:
            s = str(value.numerator)
        else:
            s = f"{value.numerator}/{value.denominator}"
        return s if value >= 0 and value.denominator == 1 else f"({s})"
    if not math.isfinite(value):
        raise ValueError(f"non-finite constant {value!r} cannot be printed")
    s = repr(float(value))
    return s if value >= 0 else f"({s})"


def to_text(node, min_prec=0) -> str:
    """Render ``node`` in the input grammar; re-parsing yields the same tree."""
    if isinstance(node, Const):
        return _fmt_const(node.value)
    if isinstance(node, Sym):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({to_text(node.arg)})"
    if isinstance(node, Neg):
        if isinstance(node.arg, Const):
            return f"-({to_text(node.arg)})"
        return "-" + to_text(node.arg, 4)
    prec = _PREC[node.op]
    if node.op == "^":
        s = f"{to_text(node.left, 4)}^{to_text(node.right, 3)}"
    elif prec == 1:
        s = f"{to_text(node.left, 1)} {node.op} {to_text(node.right, 2)}"
    else:
        s = f"{to_text(node.left, 2)}{node.op}{to_text(node.right, 3)}"
    return f"({s})" if prec < min_prec else s


# --------------------------------------------------------------------------
# compilation to straight-line code


def _val(x):
    return x.val if isinstance(x, Jet) else x


class _Runtime:
    """Helpers referenced by generated code; ``texts`` maps node ids to text."""

    def __init__(self, texts):
        self.texts = texts

    def err(self, msg, i):
        raise DomainError(msg, self.texts[i])

    def div(self, a, b, i):
        if _val(b) == 0:
            self.err("division by zero", i)
        return a / b

    def ipow(self, a, k, i):
        if isinstance(a, Jet):
            if k < 0 and a.val == 0:
                self.err("division by zero", i)
            return a.ipow(k)
        if k < 0 and a == 0:
            self.err("division by zero", i)
        return a**k

    def rpow(self, a, e, i):
        if _val(a) <= 0:
            self.err("non-integer power of a non-positive base", i)
        return self.exp(e * self.log(a, i), i)

    def sqrt(self, a, i):
        v = _val(a)
        if v < 0 or (v == 0 and isinstance(a, Jet)):
            self.err("sqrt of negative argument" if v < 0 else "sqrt not differentiable at 0", i)
        return a.sqrt() if isinstance(a, Jet) else math.sqrt(a)

    def log(self, a, i):
        if _val(a) <= 0:
            self.err("log of non-positive argument", i)
        return a.log() if isinstance(a, Jet) else math.log(a)

    def exp(self, a, i):
        try:
            return a.exp() if isinstance(a, Jet) else math.exp(a)
        except OverflowError:
            self.err("overflow in exp", i)

    def sin(self, a, i):
        return a.sin() if isinstance(a, Jet) else math.sin(a)

    def cos(self, a, i):
        return a.cos() if isinstance(a, Jet) else math.cos(a)

    def tan(self, a, i):
        return a.tan() if isinstance(a, Jet) else math.tan(a)

    def atan(self, a, i):
        return a.atan() if isinstance(a, Jet) else math.atan(a)


class CompiledFunction:
    """An expression specialised to an ordered argument list and bound constants.

    Calling :meth:`value` with floats gives the value; :meth:`grad` and
    :meth:`jet` seed dual numbers for exact first and second derivatives.
    """

    def __init__(self, root: Node, args: Sequence[str], constants: Mapping[str, float]):
        self.args = tuple(args)
        index = {name: k for k, name in enumerate(self.args)}
        lines = []
        texts = {}
        ids = {}   # id(node) -> slot
        keys = {}  # structural key -> slot

        def emit(node):
            # iterative post-order with structural sharing
            stack = [(node, False)]
            while stack:
                n, ready = stack.pop()
                if id(n) in ids:
                    continue
                if not ready:
                    stack.append((n, True))
                    for c in reversed(_children(n)):
                        if id(c) not in ids:
                            stack.append((c, False))
                    continue
                slot = _emit_one(n)
                ids[id(n)] = slot

        def _emit_one(n):
            if isinstance(n, Const):
                key = ("c", type(n.value), n.value)
            elif isinstance(n, Sym):
                key = ("s", n.name)
            elif isinstance(n, BinOp):
                key = ("b", n.op, ids[id(n.left)], ids[id(n.right)])
            elif isinstance(n, Neg):
                key = ("n", ids[id(n.arg)])
            else:
                key = ("f", n.func, ids[id(n.arg)])
            if key in keys:
                return keys[key]
            k = len(keys)
            keys[key] = k
            texts[k] = n
            target = f"v{k}"
            if isinstance(n, Const):
                lines.append(f"{target} = {float(n.value)!r}")
            elif isinstance(n, Sym):
                if n.name in index:
                    lines.append(f"{target} = x[{index[n.name]}]")
                elif n.name in constants:
                    lines.append(f"{target} = {float(constants[n.name])!r}")
                else:
                    raise UnboundSymbol(f"unbound symbol {n.name!r}")
            elif isinstance(n, Neg):
                lines.append(f"{target} = -v{key[1]}")
            elif isinstance(n, Call):
                lines.append(f"{target} = rt.{n.func}(v{key[2]}, {k})")
            else:
                a, b = f"v{key[2]}", f"v{key[3]}"
                op = n.op
                if op in "+-*":
                    lines.append(f"{target} = {a} {op} {b}")
                elif op == "/":
                    lines.append(f"{target} = rt.div({a}, {b}, {k})")
                else:
                    e = constant_value(n.right)
                    if isinstance(e, Fraction) and e.denominator == 1:
                        lines.append(f"{target} = rt.ipow({a}, {int(e)}, {k})")
                    elif e is not None:
                        lines.append(f"{target} = rt.rpow({a}, {float(e)!r}, {k})")
                    else:
                        lines.append(f"{target} = rt.rpow({a}, {b}, {k})")
            return k

        emit(root)
        out = ids[id(root)]
        body = "\n    ".join(lines) or "pass"
        src = f"def _f(x):\n    {body}\n    return v{out}\n"
        self._texts = _LazyTexts(texts)
        namespace = {"rt": _Runtime(self._texts)}
        exec(compile(src, "<partint-expr>", "exec"), namespace)
        self._f = namespace["_f"]
        self.source = src
        self.size = len(keys)

    def value(self, x) -> float:
        try:
            return float(self._f(x))
        except ZeroDivisionError as exc:  # pragma: no cover - guarded above
            raise DomainError(str(exc), "?") from exc

    def _seed(self, x, second_order):
        n = len(self.args)
        if second_order:
            zeros = np.zeros((n, n))
            return [Jet(float(x[k]), _unit(n, k), zeros) for k in range(n)]
        return [Jet(float(x[k]), _unit(n, k)) for k in range(n)]

    def grad(self, x) -> np.ndarray:
        r = self._f(self._seed(x, False))
        if isinstance(r, Jet):
            return r.grad
        return np.zeros(len(self.args))

    def value_and_grad(self, x):
        r = self._f(self._seed(x, False))
        if isinstance(r, Jet):
            return r.val, r.grad
        return float(r), np.zeros(len(self.args))

    def jet(self, x):
        """Return ``(value, gradient, hessian)`` at ``x``."""
        n = len(self.args)
        r = self._f(self._seed(x, True))
        if isinstance(r, Jet):
            return r.val, r.grad, r.hess
        return float(r), np.zeros(n), np.zeros((n, n))


_UNITS = {}


def _unit(n, k):
    key = (n, k)
    u = _UNITS.get(key)
    if u is None:
        u = np.zeros(n)
        u[k] = 1.0
        u.setflags(write=False)
        _UNITS[key] = u
    return u


class _LazyTexts(dict):
    """Slot -> node map rendering text only when an error is reported."""

    def __getitem__(self, k):
        return to_text(dict.__getitem__(self, k))


# --------------------------------------------------------------------------
# public expression type


def _as_node(value) -> Node:
    if isinstance(value, Expression):
        return value.root
    if isinstance(value, (Const, Sym, Neg, BinOp, Call)):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not expressions")
    if isinstance(value, (int, Fraction)):
        v = Fraction(value)
        return Neg(Const(-v)) if v < 0 else Const(v)
    if isinstance(value, float):
        return Neg(Const(-value)) if value < 0 else Const(value)
    if isinstance(value, str):
        return parse(value).root
    raise TypeError(f"cannot convert {type(value).__name__} to an expression")


class Expression:
    """Immutable parsed scalar field.

    Attributes:
        root: AST root node.
        free_symbols: Variable names in order of first appearance.
    """

    __slots__ = ("root", "free_symbols", "_cache")

    def __init__(self, root: Node):
        self.root = root
        seen = {}
        for n in _walk(root):
            if isinstance(n, Sym):
                seen.setdefault(n.name, None)
        self.free_symbols = tuple(seen)
        self._cache = {}

    @classmethod
    def parse(cls, source: str) -> "Expression":
        return parse(source)

    def __str__(self):
        return to_text(self.root)

    def __repr__(self):
        return f"Expression({str(self)!r})"

    def __eq__(self, other):
        return isinstance(other, Expression) and self.root == other.root

    def __hash__(self):
        return hash(self.root)

    # arithmetic builds new trees; nothing is simplified
    def __add__(self, other):
        return Expression(BinOp("+", self.root, _as_node(other)))

    def __radd__(self, other):
        return Expression(BinOp("+", _as_node(other), self.root))

    def __sub__(self, other):
        return Expression(BinOp("-", self.root, _as_node(other)))

    def __rsub__(self, other):
        return Expression(BinOp("-", _as_node(other), self.root))

    def __mul__(self, other):
        return Expression(BinOp("*", self.root, _as_node(other)))

    def __rmul__(self, other):
        return Expression(BinOp("*", _as_node(other), self.root))

    def __truediv__(self, other):
        return Expression(BinOp("/", self.root, _as_node(other)))

    def __rtruediv__(self, other):
        return Expression(BinOp("/", _as_node(other), self.root))

    def __pow__(self, other):
        return Expression(BinOp("^", self.root, _as_node(other)))

    def __neg__(self):
        return Expression(Neg(self.root))

    def compile(self, args: Sequence[str], constants: Mapping[str, float] | None = None) -> CompiledFunction:
        """Specialise to ``args`` (dual-number inputs) with ``constants`` baked in."""
        constants = dict(constants or {})
        key = (tuple(args), tuple(sorted((k, float(v)) for k, v in constants.items())))
        fn = self._cache.get(key)
        if fn is None:
            fn = CompiledFunction(self.root, args, constants)
            self._cache[key] = fn
        return fn

    def eval(self, binding: Mapping[str, float]) -> float:
        missing = [s for s in self.free_symbols if s not in binding]
        if missing:
            raise UnboundSymbol(f"unbound symbol(s): {', '.join(missing)}")
        args = self.free_symbols
        return self.compile(args).value([binding[a] for a in args])

    def grad(self, binding: Mapping[str, float], variables: Sequence[str]) -> np.ndarray:
        variables = tuple(variables)
        consts = {k: v for k, v in binding.items() if k not in variables and k in self.free_symbols}
        missing = [s for s in self.free_symbols if s not in binding]
        if missing:
            raise UnboundSymbol(f"unbound symbol(s): {', '.join(missing)}")
        return self.compile(variables, consts).grad([binding[v] for v in variables])

    def substitute(self, mapping: Mapping[str, object]) -> "Expression":
        """Replace symbols by expressions or numbers.

        Zeros introduced by the substitution are propagated (``0*x -> 0``,
        ``x + 0 -> x``, ...) so that restricting a Hamiltonian to ``f = 0``
        actually removes the terms that vanish.  No other rewriting happens.
        """
        repl = {k: _as_node(v) for k, v in mapping.items()}
        return Expression(_subst(self.root, repl))


def _is_zero(node):
    return isinstance(node, Const) and node.value == 0


def _subst(root, repl):
    memo = {}
    stack = [(root, False)]
    while stack:
        n, ready = stack.pop()
        if id(n) in memo:
            continue
        kids = _children(n)
        if not ready and kids:
            stack.append((n, True))
            stack.extend((c, False) for c in kids if id(c) not in memo)
            continue
        if isinstance(n, Sym):
            out = repl.get(n.name, n)
        elif isinstance(n, Const):
            out = n
        elif isinstance(n, Neg):
            a = memo[id(n.arg)]
            out = ZERO if _is_zero(a) else (n if a is n.arg else Neg(a))
        elif isinstance(n, Call):
            a = memo[id(n.arg)]
            out = n if a is n.arg else Call(n.func, a)
        else:
            a, b = memo[id(n.left)], memo[id(n.right)]
            out = _fold(n, a, b)
        memo[id(n)] = out
    return memo[id(root)]


def _fold(n, a, b):
    op = n.op
    if op == "*" and (_is_zero(a) or _is_zero(b)):
        return ZERO
    if op == "/" and _is_zero(a) and not _is_zero(b):
        return ZERO
    if op == "+":
        if _is_zero(a):
            return b
        if _is_zero(b):
            return a
    if op == "-":
        if _is_zero(b):
            return a
        if _is_zero(a):
            return Neg(b)
    if op == "^" and _is_zero(a):
        e = constant_value(b)
        if e is not None and e > 0:
            return ZERO
    if a is n.left and b is n.right:
        return n
    return BinOp(op, a, b)


def parse(source: str) -> Expression:
    """Parse ``source`` in the expression grammar."""
    return Expression(_Parser(source).parse())


def as_expression(value) -> Expression:
    """Coerce a string, number or expression to :class:`Expression`."""
    if isinstance(value, Expression):
        return value
    return Expression(_as_node(value))


def evaluate(e: Expression, binding: Mapping[str, float]) -> float:
    return as_expression(e).eval(binding)


def grad(e: Expression, binding: Mapping[str, float], variables: Sequence[str]) -> np.ndarray:
    return as_expression(e).grad(binding, variables)


def symbol(name: str) -> Expression:
    if not NAME_RE.match(name):
        raise ValueError(f"invalid variable name {name!r}")
    return Expression(Sym(name))

"""Exact Laurent polynomials over the rationals and particular-involution
certificates.

Monomials may carry negative exponents, which covers coefficients such as
``p_r/(m r)``.  Everything in this module is exact: coefficients are
:class:`fractions.Fraction` and no floating point value is ever produced,
except by :meth:`SparsePoly.evaluate`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, NamedTuple, Sequence

from partint.errors import NotPolynomial
from partint.expr import Call, Const, Expression, Neg, Sym, as_expression, constant_value, parse

Exponents = tuple[int, ...]


class SparsePoly:
    """Sparse Laurent polynomial with rational coefficients.

    Storage is canonical: ``variables`` is the sorted tuple of names that
    occur with a non-zero exponent somewhere, and ``terms`` maps exponent
    vectors (aligned with ``variables``) to non-zero coefficients.  Equal
    polynomials therefore compare and hash identically.
    """

    __slots__ = ("variables", "terms")

    def __init__(self, terms: Mapping[Exponents, Fraction] | None = None, variables: Sequence[str] = ()):
        variables = tuple(variables)
        raw = {}
        for exps, c in (terms or {}).items():
            c = Fraction(c)
            if c:
                raw[tuple(exps)] = raw.get(tuple(exps), 0) + c
        raw = {e: c for e, c in raw.items() if c}
        used = sorted({v for e in raw for v, k in zip(variables, e) if k})
        if tuple(used) == variables:
            self.variables = variables
            self.terms = raw
        else:
            pos = [variables.index(v) for v in used]
            self.variables = tuple(used)
            self.terms = {}
            for e, c in raw.items():
                key = tuple(e[i] for i in pos)
                self.terms[key] = self.terms.get(key, 0) + c
            self.terms = {e: c for e, c in self.terms.items() if c}

    # construction ---------------------------------------------------------
    @classmethod
    def constant(cls, c) -> "SparsePoly":
        return cls({(): Fraction(c)}, ())

    @classmethod
    def var(cls, name: str, power: int = 1) -> "SparsePoly":
        return cls({(power,): Fraction(1)}, (name,))

    @classmethod
    def monomial(cls, powers: Mapping[str, int], coeff=1) -> "SparsePoly":
        names = tuple(sorted(powers))
        return cls({tuple(powers[v] for v in names): Fraction(coeff)}, names)

    @classmethod
    def from_expression(cls, e) -> "SparsePoly":
        return poly_from_expression(e)

    # views ----------------------------------------------------------------
    def items(self):
        """Yield ``(powers_dict, coefficient)`` in a deterministic order."""
        for e in sorted(self.terms):
            yield {v: k for v, k in zip(self.variables, e) if k}, self.terms[e]

    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def is_constant(self) -> bool:
        return not self.variables

    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    def constant_term(self) -> Fraction:
        return self.terms.get(tuple(0 for _ in self.variables), Fraction(0))

    def has_negative_exponents(self, among: Iterable[str] | None = None) -> bool:
        among = set(self.variables if among is None else among)
        return any(k < 0 for e in self.terms for v, k in zip(self.variables, e) if v in among)

    def __len__(self):
        return len(self.terms)

    # arithmetic -----------------------------------------------------------
    def _aligned(self, other: "SparsePoly"):
        names = tuple(sorted(set(self.variables) | set(other.variables)))
        return names, self._expand(names), other._expand(names)

    def _expand(self, names):
        pos = [self.variables.index(v) if v in self.variables else -1 for v in names]
        return {tuple(e[i] if i >= 0 else 0 for i in pos): c for e, c in self.terms.items()}

    @staticmethod
    def _coerce(other):
        if isinstance(other, SparsePoly):
            return other
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return SparsePoly.constant(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        names, a, b = self._aligned(other)
        for e, c in b.items():
            a[e] = a.get(e, 0) + c
        return SparsePoly(a, names)

    __radd__ = __add__

    def __neg__(self):
        return SparsePoly({e: -c for e, c in self.terms.items()}, self.variables)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        names, a, b = self._aligned(other)
        out = {}
        for (ea, ca), (eb, cb) in itertools.product(a.items(), b.items()):
            e = tuple(x + y for x, y in zip(ea, eb))
            out[e] = out.get(e, 0) + ca * cb
        return SparsePoly(out, names)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int):
            raise TypeError("only integer powers")
        if k < 0:
            if not self.is_monomial():
                raise NotPolynomial("negative power of a non-monomial")
            (e, c), = self.terms.items()
            return SparsePoly({tuple(x * k for x in e): c**k}, self.variables)
        result = SparsePoly.constant(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def inverse_monomial(self) -> "SparsePoly":
        if not self.is_monomial():
            raise NotPolynomial("division by a non-monomial")
        (e, c), = self.terms.items()
        return SparsePoly({tuple(-x for x in e): 1 / c}, self.variables)

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            d = Fraction(other)
            return SparsePoly({e: c / d for e, c in self.terms.items()}, self.variables)
        return self * other.inverse_monomial()

    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self.variables == other.variables and self.terms == other.terms

    def __hash__(self):
        return hash((self.variables, frozenset(self.terms.items())))

    # calculus -------------------------------------------------------------
    def diff(self, name: str) -> "SparsePoly":
        if name not in self.variables:
            return SparsePoly()
        i = self.variables.index(name)
        out = {}
        for e, c in self.terms.items():
            if e[i]:
                ne = list(e)
                ne[i] -= 1
                out[tuple(ne)] = c * e[i]
        return SparsePoly(out, self.variables)

    def substitute_zero(self, name: str) -> "SparsePoly":
        """Restrict to ``name = 0`` (terms with a negative power of it are an error)."""
        if name not in self.variables:
            return self
        i = self.variables.index(name)
        if any(e[i] < 0 for e in self.terms):
            raise ZeroDivisionError(f"{name} appears with a negative exponent")
        return SparsePoly({e: c for e, c in self.terms.items() if e[i] == 0}, self.variables)

    def evaluate(self, binding: Mapping[str, float]) -> float:
        total = 0.0
        for e, c in self.terms.items():
            t = float(c)
            for v, k in zip(self.variables, e):
                if k:
                    t *= float(binding[v]) ** k
            total += t
        return total

    def evaluate_exact(self, binding: Mapping[str, Fraction]) -> Fraction:
        total = Fraction(0)
        for e, c in self.terms.items():
            t = c
            for v, k in zip(self.variables, e):
                if k:
                    t *= Fraction(binding[v]) ** k
            total += t
        return total

    # printing -------------------------------------------------------------
    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for powers, c in self.items():
            factors = [v if k == 1 else f"{v}^{k}" for v, k in powers.items()]
            mag = abs(c)
            if factors:
                if mag != 1:
                    factors.insert(0, str(mag) if mag.denominator == 1 else f"({mag})")
                body = "*".join(factors)
            else:
                body = str(mag) if mag.denominator == 1 else f"({mag})"
            parts.append(("-" if c < 0 else "+", body))
        sign, body = parts[0]
        out = ("-" if sign == "-" else "") + body
        for sign, body in parts[1:]:
            out += f" {sign} {body}"
        return out

    def __repr__(self):
        return f"SparsePoly({str(self)!r})"

    def to_expression(self) -> Expression:
        return parse(str(self))


# --------------------------------------------------------------------------
# conversion from expressions


def poly_from_expression(e) -> SparsePoly:
    """Convert an expression built from + - * / ^ into a Laurent polynomial.

    Division is allowed when the denominator collapses to a single monomial,
    possibly after clearing nested fractions (``x/(a*b/(a+b))`` is fine).
    Raises :class:`NotPolynomial` for transcendental functions, non-integer
    powers, or genuine rational functions.
    """
    num, den = _rational(as_expression(e).root)
    if den.is_monomial():
        return num * den.inverse_monomial()
    if num.is_zero():
        return num
    raise NotPolynomial(f"denominator {den} is not a monomial")


def _rational(node) -> tuple[SparsePoly, SparsePoly]:
    # returns (numerator, denominator); the denominator is folded into the
    # numerator whenever it is a monomial so it stays a polynomial otherwise
    one = SparsePoly.constant(1)
    if isinstance(node, Const):
        v = node.value
        if isinstance(v, float):
            v = Fraction(repr(v))
        return SparsePoly.constant(v), one
    if isinstance(node, Sym):
        return SparsePoly.var(node.name), one
    if isinstance(node, Neg):
        n, d = _rational(node.arg)
        return -n, d
    if isinstance(node, Call):
        raise NotPolynomial(f"function {node.func}() is not polynomial")
    op = node.op
    if op == "^":
        k = constant_value(node.right)
        if not (isinstance(k, Fraction) and k.denominator == 1):
            raise NotPolynomial("power with a non-integer or non-constant exponent")
        n, d = _rational(node.left)
        k = int(k)
        if k >= 0:
            return _norm(n**k, d**k)
        return _norm(d ** (-k), n ** (-k))
    a, b = _rational(node.left), _rational(node.right)
    if op == "+":
        return _norm(a[0] * b[1] + b[0] * a[1], a[1] * b[1])
    if op == "-":
        return _norm(a[0] * b[1] - b[0] * a[1], a[1] * b[1])
    if op == "*":
        return _norm(a[0] * b[0], a[1] * b[1])
    if b[0].is_zero():
        raise NotPolynomial("division by zero")
    return _norm(a[0] * b[1], a[1] * b[0])


def _norm(num, den):
    if den.is_monomial():
        return num * den.inverse_monomial(), SparsePoly.constant(1)
    return num, den


# --------------------------------------------------------------------------
# brackets and reduction


def poly_poisson(f: SparsePoly, g: SparsePoly, chart) -> SparsePoly:
    """Exact canonical bracket; symbols outside the chart are inert constants."""
    out = SparsePoly()
    for q, p in zip(chart.q_names, chart.p_names):
        out = out + f.diff(q) * g.diff(p) - f.diff(p) * g.diff(q)
    return out


@dataclass(frozen=True)
class MonomialOrder:
    """Lexicographic or graded-lex order over an explicit variable ranking.

    Variables not listed rank after the listed ones, alphabetically.
    """

    kind: str = "grlex"
    variables: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in ("lex", "grlex"):
            raise ValueError(f"unknown monomial order {self.kind!r}")
        object.__setattr__(self, "variables", tuple(self.variables))

    def key(self, powers: Mapping[str, int]):
        ranked = list(self.variables) + sorted(v for v in powers if v not in self.variables)
        exps = tuple(powers.get(v, 0) for v in ranked)
        if self.kind == "lex":
            return exps
        return (sum(exps),) + exps

    def leading(self, p: SparsePoly):
        """Return ``(powers, coeff)`` of the leading term."""
        return max(p.items(), key=lambda t: self.key(t[0]))


def _divides(m: Mapping[str, int], t: Mapping[str, int]) -> bool:
    # only the positive part of the divisor has to be present in the term;
    # negative exponents are coefficient-like (inverted variables)
    return all(t.get(v, 0) >= k for v, k in m.items() if k > 0)


def _quotient(t, m):
    names = set(t) | set(m)
    return {v: t.get(v, 0) - m.get(v, 0) for v in names}


class Reduction(NamedTuple):
    coefficients: list
    remainder: SparsePoly


def is_single_variable(g: SparsePoly) -> bool:
    """True for ``c * v`` with a single variable to the first power."""
    if not g.is_monomial():
        return False
    (powers, _), = g.items()
    return len(powers) == 1 and next(iter(powers.values())) == 1


def module_reduce(p: SparsePoly, gens: Sequence[SparsePoly], order: MonomialOrder | str = "grlex",
                  max_steps: int = 100_000) -> Reduction:
    """Multivariate division of ``p`` by ``gens``.

    Returns coefficients ``a_s`` and a remainder ``r`` with
    ``p == sum(a_s * gens[s]) + r`` and no monomial of ``r`` divisible by a
    generator's leading monomial.  With single-variable generators the
    outcome is exact: ``r == 0`` iff every monomial of ``p`` contains one of
    the generator variables, independently of the order.
    """
    if not gens:
        raise ValueError("need at least one generator")
    if isinstance(order, str):
        order = MonomialOrder(order)
    leads = [order.leading(g) for g in gens]
    coeffs = [SparsePoly() for _ in gens]
    remainder = SparsePoly()
    work = p
    steps = 0
    while not work.is_zero():
        steps += 1
        if steps > max_steps:
            # terms of a Laurent order need not be well-ordered; give up
            remainder = remainder + work
            break
        powers, c = order.leading(work)
        for s, (lm, lc) in enumerate(leads):
            if _divides(lm, powers):
                q = SparsePoly.monomial(_quotient(powers, lm), c / lc)
                coeffs[s] = coeffs[s] + q
                work = work - q * gens[s]
                break
        else:
            t = SparsePoly.monomial(powers, c)
            remainder = remainder + t
            work = work - t
    return Reduction(coeffs, remainder)


@dataclass
class InvolutionCertificate:
    """Exact evidence for (or against) particular involution of ``generators``.

    ``brackets[(i, j)] == sum(coefficients[(i, j)][s] * generators[s]) +
    residuals[(i, j)]`` holds as a polynomial identity for every ``i < j``.
    """

    generators: list
    chart_name: str
    brackets: dict = field(default_factory=dict)
    coefficients: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    regular: dict = field(default_factory=dict)
    decided: bool = True

    @property
    def verdict(self) -> str:
        if all(r.is_zero() for r in self.residuals.values()):
            return "particular involution"
        return "not in particular involution" if self.decided else "undecided"

    @property
    def positive(self) -> bool:
        return self.verdict == "particular involution"

    def reconstructs(self) -> bool:
        for key, br in self.brackets.items():
            rebuilt = self.residuals[key]
            for a, f in zip(self.coefficients[key], self.generators):
                rebuilt = rebuilt + a * f
            if rebuilt != br:
                return False
        return True

    def to_dict(self) -> dict:
        pairs = []
        for (i, j) in sorted(self.brackets):
            pairs.append({
                "i": i,
                "j": j,
                "bracket": str(self.brackets[(i, j)]),
                "coefficients": [str(a) for a in self.coefficients[(i, j)]],
                "residual": str(self.residuals[(i, j)]),
                "regular": self.regular[(i, j)],
            })
        return {
            "chart": self.chart_name,
            "generators": [str(g) for g in self.generators],
            "pairs": pairs,
            "verdict": self.verdict,
        }


def certify_involution(fs: Sequence[SparsePoly], chart, order: MonomialOrder | str | None = None) -> InvolutionCertificate:
    """Reduce every pairwise bracket of ``fs`` modulo the module they generate.

    A coefficient is flagged ``"regular"`` when it has no negative power of a
    chart coordinate (so it is finite on the whole zero set); otherwise the
    flag reads ``"unverified"`` and finiteness on ``f = 0`` is left to the
    caller.
    """
    fs = [f if isinstance(f, SparsePoly) else poly_from_expression(f) for f in fs]
    if order is None:
        order = MonomialOrder("grlex", chart.names)
    elif isinstance(order, str):
        order = MonomialOrder(order, chart.names)
    cert = InvolutionCertificate(list(fs), chart.name)
    cert.decided = all(is_single_variable(f) for f in fs)
    coords = set(chart.names)
    for i, j in itertools.combinations(range(len(fs)), 2):
        br = poly_poisson(fs[i], fs[j], chart)
        red = module_reduce(br, fs, order)
        cert.brackets[(i, j)] = br
        cert.coefficients[(i, j)] = red.coefficients
        cert.residuals[(i, j)] = red.remainder
        cert.regular[(i, j)] = [
            "regular" if not a.has_negative_exponents(coords) else "unverified" for a in red.coefficients
        ]
    return cert

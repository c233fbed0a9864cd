"""Canonical (Darboux) charts, phase points, Hamiltonian vector fields and
Poisson brackets evaluated with dual-number gradients."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from partint.errors import ChartError
from partint.expr import NAME_RE, Expression, as_expression


@dataclass(frozen=True)
class Chart:
    """Canonical coordinates ``(q^1..q^n, p_1..p_n)`` plus bound model constants."""

    name: str
    q_names: tuple[str, ...]
    p_names: tuple[str, ...]
    constants: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        q, p = tuple(self.q_names), tuple(self.p_names)
        object.__setattr__(self, "q_names", q)
        object.__setattr__(self, "p_names", p)
        object.__setattr__(self, "constants", dict(self.constants))
        if len(q) != len(p) or not q:
            raise ChartError(f"chart {self.name!r}: need n >= 1 coordinates and as many momenta")
        names = q + p
        if len(set(names)) != len(names):
            raise ChartError(f"chart {self.name!r}: coordinate names must be distinct")
        for s in names:
            if not NAME_RE.match(s):
                raise ChartError(f"chart {self.name!r}: invalid variable name {s!r}")
        clash = set(self.constants) & set(names)
        if clash:
            raise ChartError(f"chart {self.name!r}: constants shadow coordinates {sorted(clash)}")

    def __hash__(self):
        return hash((self.name, self.q_names, self.p_names, tuple(sorted(self.constants.items()))))

    @property
    def n(self) -> int:
        return len(self.q_names)

    @property
    def names(self) -> tuple[str, ...]:
        return self.q_names + self.p_names

    def index(self, name: str) -> int:
        return self.names.index(name)

    def conjugate(self, name: str) -> str:
        """Return the canonical partner of a coordinate or momentum."""
        if name in self.p_names:
            return self.q_names[self.p_names.index(name)]
        if name in self.q_names:
            return self.p_names[self.q_names.index(name)]
        raise ChartError(f"{name!r} is not a coordinate of chart {self.name!r}")

    def point(self, values=None, **named) -> "PhasePoint":
        """Build a phase point from a full vector or from named values (missing -> 0)."""
        if values is not None and not isinstance(values, Mapping):
            return PhasePoint(self, np.asarray(values, dtype=float))
        named = {**(values or {}), **named}
        unknown = set(named) - set(self.names)
        if unknown:
            raise ChartError(f"chart {self.name!r} has no variables {sorted(unknown)}")
        return PhasePoint(self, np.array([float(named.get(s, 0.0)) for s in self.names]))

    def with_constants(self, **constants) -> "Chart":
        return Chart(self.name, self.q_names, self.p_names, {**self.constants, **constants})

    def check_expression(self, e: Expression) -> None:
        extra = set(e.free_symbols) - set(self.names) - set(self.constants)
        if extra:
            raise ChartError(
                f"expression '{e}' uses symbols {sorted(extra)} unknown to chart {self.name!r}"
            )

    def compiled(self, e) -> "CompiledField":
        e = as_expression(e)
        self.check_expression(e)
        return CompiledField(e, self)


@dataclass(frozen=True, eq=False)
class PhasePoint:
    chart: Chart
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (2 * self.chart.n,):
            raise ChartError(f"chart {self.chart.name!r} needs {2 * self.chart.n} values, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ChartError("phase point has non-finite entries")
        object.__setattr__(self, "values", v)

    @property
    def q(self) -> np.ndarray:
        return self.values[: self.chart.n]

    @property
    def p(self) -> np.ndarray:
        return self.values[self.chart.n :]

    def __getitem__(self, name: str) -> float:
        return float(self.values[self.chart.index(name)])

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.chart.names, self.values.tolist()))

    def binding(self) -> dict[str, float]:
        return {**self.chart.constants, **self.as_dict()}


@dataclass(frozen=True, eq=False)
class TangentVector:
    chart: Chart
    components: np.ndarray

    @property
    def qdot(self) -> np.ndarray:
        return self.components[: self.chart.n]

    @property
    def pdot(self) -> np.ndarray:
        return self.components[self.chart.n :]

    def __getitem__(self, name: str) -> float:
        return float(self.components[self.chart.index(name)])


class CompiledField:
    """A scalar field compiled against a chart's coordinate ordering.

    Used wherever the same function is evaluated many times (integrators,
    samplers); the one-shot functions below build one on the fly.
    """

    def __init__(self, e: Expression, chart: Chart):
        self.expression = e
        self.chart = chart
        self.n = chart.n
        self._fn = e.compile(chart.names, chart.constants)

    def value(self, z) -> float:
        return self._fn.value(z)

    def grad(self, z) -> np.ndarray:
        return self._fn.grad(z)

    def vector_field(self, z) -> np.ndarray:
        g = self._fn.grad(z)
        n = self.n
        return np.concatenate((g[n:], -g[:n]))

    def vector_field_jacobian(self, z):
        """Return ``(X_H(z), dX_H/dz)`` from one second-order jet evaluation."""
        _, g, h = self._fn.jet(z)
        n = self.n
        X = np.concatenate((g[n:], -g[:n]))
        J = np.concatenate((h[n:], -h[:n]))
        return X, J


def symplectic_matrix(n: int) -> np.ndarray:
    J = np.zeros((2 * n, 2 * n))
    J[:n, n:] = np.eye(n)
    J[n:, :n] = -np.eye(n)
    return J


def bracket_from_gradients(gf: np.ndarray, gg: np.ndarray, n: int) -> float:
    return float(gf[:n] @ gg[n:] - gf[n:] @ gg[:n])


def ham_vector_field(H, x: PhasePoint) -> TangentVector:
    """Right-hand side of Hamilton's equations, ``(dH/dp, -dH/dq)``, at ``x``."""
    return TangentVector(x.chart, x.chart.compiled(H).vector_field(x.values))


def poisson_bracket(f, g, x: PhasePoint) -> float:
    """Canonical bracket ``{f, g} = f_q . g_p - f_p . g_q`` at ``x``."""
    chart = x.chart
    gf = chart.compiled(f).grad(x.values)
    gg = chart.compiled(g).grad(x.values)
    return bracket_from_gradients(gf, gg, chart.n)


def time_derivative(f, H, x: PhasePoint) -> float:
    """Rate of change of ``f`` along the flow of ``H``: ``{f, H}``."""
    return poisson_bracket(f, H, x)


def bracket_matrix(fs: Sequence, x: PhasePoint) -> np.ndarray:
    """All pairwise brackets ``{f_i, f_j}`` at one point."""
    chart = x.chart
    grads = [chart.compiled(f).grad(x.values) for f in fs]
    n = chart.n
    G = np.array(grads)
    return G[:, :n] @ G[:, n:].T - G[:, n:] @ G[:, :n].T

"""Fixed-step integration of Hamilton's equations with conservation diagnostics.

Three schemes are available: the implicit midpoint rule (symplectic, works
for any smooth ``H``), Strang kick-drift-kick splitting (explicit, needs
``H = T(p) + V(q)``) and classical RK4, kept as a non-symplectic reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from partint.errors import (
    ChartError,
    DomainError,
    IntegrationAborted,
    NonConvergence,
    PartintError,
    SeparabilityViolation,
)
from partint.expr import BinOp, Expression, Neg, as_expression
from partint.poisson import Chart, CompiledField, PhasePoint

SCHEMES = ("implicit-midpoint", "strang-split", "rk4-reference")


@dataclass(frozen=True)
class IntegratorSpec:
    """Scheme, step size and step count of a run (plus Newton settings)."""

    scheme: str = "implicit-midpoint"
    dt: float = 1e-3
    steps: int = 1000
    newton_tol: float = 1e-12
    newton_max_iter: int = 50

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {', '.join(SCHEMES)}")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError("dt must be a positive finite number")
        if int(self.steps) != self.steps or self.steps < 0:
            raise ValueError("steps must be a non-negative integer")
        if not self.newton_tol > 0:
            raise ValueError("newton_tol must be positive")
        if self.newton_max_iter < 1:
            raise ValueError("newton_max_iter must be at least 1")

    @property
    def total_time(self) -> float:
        return self.dt * self.steps


@dataclass
class Trajectory:
    """Sampled integral curve.

    ``states`` is a ``(len(times), 2n)`` array in chart order.  If the run
    stopped early, ``error`` holds the cause and the arrays end at the last
    good state.
    """

    chart: Chart
    times: np.ndarray
    states: np.ndarray
    observables: dict[str, np.ndarray] = field(default_factory=dict)
    error: Exception | None = None

    def __len__(self):
        return len(self.times)

    @property
    def points(self) -> list[PhasePoint]:
        return [self.chart.point(s) for s in self.states]

    @property
    def final(self) -> PhasePoint:
        return self.chart.point(self.states[-1])

    @property
    def completed(self) -> bool:
        return self.error is None

    def series(self, name: str) -> np.ndarray:
        """Observable series, or a chart coordinate's values."""
        if name in self.observables:
            return self.observables[name]
        return self.states[:, self.chart.index(name)]

    def raise_for_error(self) -> "Trajectory":
        if self.error is not None:
            raise IntegrationAborted(self.error, self)
        return self


# ---- steppers ------------------------------------------------------------------

def _field(H, chart: Chart) -> CompiledField:
    return H if isinstance(H, CompiledField) else chart.compiled(H)


def _midpoint(fld: CompiledField, x: np.ndarray, dt: float, tol: float, max_iter: int) -> np.ndarray:
    # Newton on F(z) = z - x - dt X((x + z)/2); dF/dz = I - dt/2 DX
    eye = np.eye(len(x))
    z = x + dt * fld.vector_field(x)
    F = z - x - dt * fld.vector_field(0.5 * (x + z))
    norm = np.max(np.abs(F))
    for _ in range(max_iter):
        if norm <= tol * (1.0 + np.max(np.abs(z))):
            return z
        _, J = fld.vector_field_jacobian(0.5 * (x + z))
        delta = np.linalg.solve(eye - 0.5 * dt * J, -F)
        lam = 1.0
        for _ in range(30):
            z_try = z + lam * delta
            try:
                F_try = z_try - x - dt * fld.vector_field(0.5 * (x + z_try))
                norm_try = np.max(np.abs(F_try))
            except DomainError:
                norm_try = math.inf
            if norm_try < norm or lam < 1e-8:
                break
            lam *= 0.5
        if not math.isfinite(norm_try):
            break
        z, F, norm = z_try, F_try, norm_try
    if norm <= tol * (1.0 + np.max(np.abs(z))):
        return z
    raise NonConvergence(
        f"implicit midpoint: Newton residual {norm:.3g} after {max_iter} iterations "
        f"(tolerance {tol:g}); try a smaller dt"
    )


def step_implicit_midpoint(H, x: PhasePoint, dt: float, spec: IntegratorSpec | None = None) -> PhasePoint:
    """One implicit-midpoint step ``z = x + dt X_H((x + z)/2)``.

    Solved by damped Newton with the exact Jacobian of ``X_H`` (dual numbers),
    refreshed every iteration; steps that increase the residual are halved.

    Raises:
        NonConvergence: Newton did not reach ``spec.newton_tol``.
        DomainError: the flow reached a pole of ``H``.
    """
    spec = spec or IntegratorSpec(dt=abs(dt) or 1.0)
    fld = _field(H, x.chart)
    z = _midpoint(fld, x.values, dt, spec.newton_tol, spec.newton_max_iter)
    return x.chart.point(z)


def _check_separable(T: Expression, V: Expression, chart: Chart) -> None:
    q, p = set(chart.q_names), set(chart.p_names)
    bad_T = set(T.free_symbols) & q
    bad_V = set(V.free_symbols) & p
    if bad_T:
        raise SeparabilityViolation(f"kinetic part depends on coordinates {sorted(bad_T)}")
    if bad_V:
        raise SeparabilityViolation(f"potential part depends on momenta {sorted(bad_V)}")


def split_hamiltonian(H, chart: Chart) -> tuple[Expression, Expression]:
    """Split ``H`` into ``(T(p), V(q))`` along its top-level sums.

    Raises:
        SeparabilityViolation: some summand mixes coordinates and momenta.
    """
    H = as_expression(H)
    q, p = set(chart.q_names), set(chart.p_names)
    T_terms, V_terms = [], []

    def visit(node, sign):
        if isinstance(node, BinOp) and node.op in "+-":
            visit(node.left, sign)
            visit(node.right, sign if node.op == "+" else -sign)
            return
        if isinstance(node, Neg):
            visit(node.arg, -sign)
            return
        e = Expression(node)
        syms = set(e.free_symbols)
        if syms & q and syms & p:
            raise SeparabilityViolation(f"term '{e}' mixes coordinates and momenta")
        (T_terms if syms & p else V_terms).append(e if sign > 0 else -e)

    visit(H.root, 1)

    def total(terms):
        out = None
        for t in terms:
            out = t if out is None else out + t
        return out if out is not None else Expression.parse("0")

    return total(T_terms), total(V_terms)


class _Strang:
    def __init__(self, T, V, chart: Chart):
        T, V = as_expression(T), as_expression(V)
        chart.check_expression(T)
        chart.check_expression(V)
        _check_separable(T, V, chart)
        self.n = chart.n
        self.T = chart.compiled(T)
        self.V = chart.compiled(V)

    def __call__(self, x: np.ndarray, dt: float) -> np.ndarray:
        n = self.n
        z = x.copy()
        z[n:] -= 0.5 * dt * self.V.grad(z)[:n]
        z[:n] += dt * self.T.grad(z)[n:]
        z[n:] -= 0.5 * dt * self.V.grad(z)[:n]
        return z


def step_strang(T, V, x: PhasePoint, dt: float) -> PhasePoint:
    """Kick-drift-kick step for ``H = T(p) + V(q)``.

    Raises:
        SeparabilityViolation: ``T`` uses a coordinate or ``V`` a momentum.
    """
    return x.chart.point(_Strang(T, V, x.chart)(x.values, dt))


def _rk4(fld: CompiledField, x: np.ndarray, dt: float) -> np.ndarray:
    k1 = fld.vector_field(x)
    k2 = fld.vector_field(x + 0.5 * dt * k1)
    k3 = fld.vector_field(x + 0.5 * dt * k2)
    k4 = fld.vector_field(x + dt * k3)
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step_rk4(H, x: PhasePoint, dt: float) -> PhasePoint:
    return x.chart.point(_rk4(_field(H, x.chart), x.values, dt))


def _stepper(H: Expression, chart: Chart, spec: IntegratorSpec):
    if spec.scheme == "implicit-midpoint":
        fld = chart.compiled(H)
        return lambda z, dt: _midpoint(fld, z, dt, spec.newton_tol, spec.newton_max_iter)
    if spec.scheme == "strang-split":
        return _Strang(*split_hamiltonian(H, chart), chart)
    fld = chart.compiled(H)
    return lambda z, dt: _rk4(fld, z, dt)


def _named_observables(observables, chart: Chart) -> dict[str, Expression]:
    if observables is None:
        return {}
    if isinstance(observables, Mapping):
        items = observables.items()
    else:
        items = []
        for ob in observables:
            if isinstance(ob, tuple):
                items.append(ob)
            else:
                items.append((str(ob), ob))
    out = {}
    for name, e in items:
        e = as_expression(e)
        chart.check_expression(e)
        out[name] = e
    return out


def integrate(H, x0: PhasePoint, spec: IntegratorSpec, observables=None) -> Trajectory:
    """Integrate from ``x0`` for ``spec.steps`` steps, recording observables.

    The energy is recorded as ``"H"``.  ``observables`` is a name->expression
    mapping, or a sequence of expressions/strings (named by their text).
    If a step fails, the returned trajectory stops at the last good state and
    carries the exception in ``error`` (see :meth:`Trajectory.raise_for_error`).
    """
    H = as_expression(H)
    chart = x0.chart
    chart.check_expression(H)
    obs = {"H": H, **_named_observables(observables, chart)}
    step = _stepper(H, chart, spec)
    fields = {name: chart.compiled(e) for name, e in obs.items()}

    steps = int(spec.steps)
    states = np.empty((steps + 1, 2 * chart.n))
    states[0] = x0.values
    error = None
    done = 0
    for k in range(steps):
        try:
            z = step(states[k], spec.dt)
            if not np.all(np.isfinite(z)):
                raise DomainError("state became non-finite", "H")
        except (PartintError, ArithmeticError, np.linalg.LinAlgError) as exc:
            error = exc
            break
        states[k + 1] = z
        done = k + 1
    states = states[: done + 1]
    times = spec.dt * np.arange(done + 1)
    series = {}
    for name, fld in fields.items():
        vals = np.empty(len(states))
        for i, s in enumerate(states):
            try:
                vals[i] = fld.value(s)
            except DomainError:
                vals[i] = math.nan
        series[name] = vals
    return Trajectory(chart, times, states, series, error)


# ---- diagnostics -------------------------------------------------------------

@dataclass(frozen=True)
class ObservableDrift:
    """Level-set statistics of one registered observable.

    ``residual`` is ``max |f(t)|`` when the run started on ``f = 0`` and
    ``max |f(t) - f(0)| / |f(0)|`` otherwise (``relative`` tells which).
    """

    name: str
    initial: float
    residual: float
    relative: bool
    flagged: bool


@dataclass(frozen=True)
class DriftReport:
    energy_initial: float
    energy_drift: float
    observables: tuple[ObservableDrift, ...]
    completed: bool = True

    @property
    def flagged(self) -> list[str]:
        return [o.name for o in self.observables if o.flagged]

    def to_dict(self) -> dict:
        return {
            "energy_initial": self.energy_initial,
            "energy_drift": self.energy_drift,
            "completed": self.completed,
            "observables": {
                o.name: {"initial": o.initial, "residual": o.residual,
                         "relative": o.relative, "flagged": o.flagged}
                for o in self.observables
            },
        }


def _max_abs(a) -> float:
    a = np.abs(np.asarray(a, dtype=float))
    a = a[~np.isnan(a)]
    return float(a.max()) if a.size else float("nan")


def drift_report(traj: Trajectory, tol: float = 1e-8, zero_tol: float = 1e-12) -> DriftReport:
    """Energy drift ``max |E - E0| / |E0|`` and per-observable level-set residuals.

    An observable with ``|f(0)| <= zero_tol`` counts as started on its zero
    set and is flagged when ``max_t |f(t)| > tol``; otherwise its relative
    change is reported and never flagged.  A zero initial energy makes the
    energy drift absolute.
    """
    if "H" not in traj.observables or len(traj) == 0:
        raise ValueError("trajectory has no recorded energy")
    E = traj.observables["H"]
    E0 = float(E[0])
    dE = _max_abs(E - E0)
    drift = dE / abs(E0) if E0 != 0 else dE
    rows = []
    for name, f in traj.observables.items():
        if name == "H":
            continue
        f0 = float(f[0])
        if abs(f0) <= zero_tol:
            res = _max_abs(f)
            rows.append(ObservableDrift(name, f0, res, False, res > tol))
        else:
            res = _max_abs(f - f0) / abs(f0)
            rows.append(ObservableDrift(name, f0, res, True, False))
    return DriftReport(E0, drift, tuple(rows), traj.completed)

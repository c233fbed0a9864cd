"""Numerical and symbolic checks of particular integrals and the reductions they enable.

The main entry points are :func:`verify_particular_integral`,
:func:`verify_involution_numeric`, :func:`match_reduced_momenta`,
:func:`compare_full_vs_reduced` and :func:`reduced_ladder`.  Samplers are
seeded numpy Generators, so every report is reproducible.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from partint.dynamics import IntegratorSpec, integrate
from partint.errors import (
    DomainError,
    NotAMomentumCoordinate,
    NotPolynomial,
    PartintError,
    PreconditionViolation,
    RankDeficient,
    SamplerError,
)
from partint.expr import Expression, as_expression
from partint.models.base import Model
from partint.models.nbody import coordinate_names, nbody_cartesian, pair_rho, pairs
from partint.models.rho import rho_hamiltonian, rho_names, rho_potential
from partint.models.volume import (
    vol_hamiltonian,
    volume_expressions,
    volume_jacobian,
    volume_names,
    volume_variables,
)
from partint.poisson import Chart, CompiledField, bracket_from_gradients
from partint.polyalg import SparsePoly, module_reduce, poly_from_expression

ON_MANIFOLD_TOL = 1e-9
INDEPENDENCE_TOL = 1e-6
OFFSETS = (1e-1, 1e-2, 1e-3)
STABILITY_TOL = 1e-4


# ---- sampling ------------------------------------------------------------------

class BoxSampler:
    """Seeded sampler of ambient points, with projection onto joint zero sets.

    Points are drawn uniformly from ``box`` (per-variable intervals, missing
    variables default to [-1, 1]) or from ``draw(rng)`` when given, then
    pulled onto ``f_1 = ... = f_k = 0`` by Gauss-Newton along the gradients.
    A degenerate interval ``(a, a)`` pins a variable.
    """

    def __init__(self, chart: Chart, box: Mapping[str, tuple] | None = None, seed: int = 0,
                 draw=None, max_tries: int = 200):
        self.chart = chart
        box = dict(box or {})
        unknown = set(box) - set(chart.names)
        if unknown:
            raise SamplerError(f"box names {sorted(unknown)} are not variables of chart {chart.name!r}")
        self.lo = np.array([float(box.get(s, (-1.0, 1.0))[0]) for s in chart.names])
        self.hi = np.array([float(box.get(s, (-1.0, 1.0))[1]) for s in chart.names])
        self.pinned = {i: self.lo[i] for i in range(len(self.lo)) if self.lo[i] == self.hi[i]}
        self.rng = np.random.default_rng(seed)
        self.draw = draw
        self.max_tries = max_tries

    @classmethod
    def for_model(cls, model: Model, seed: int = 0, box: Mapping[str, tuple] | None = None) -> "BoxSampler":
        merged = model.sampling_box()
        merged.update(box or {})
        # a box override means the caller wants box sampling
        return cls(model.chart, merged, seed, draw=None if box else model.sampler)

    def ambient(self) -> np.ndarray:
        if self.draw is not None:
            x = np.asarray(self.draw(self.rng), dtype=float)
            for i, v in self.pinned.items():
                x[i] = v
            return x
        return self.rng.uniform(self.lo, self.hi)

    def project(self, x: np.ndarray, fields: Sequence[CompiledField], tol: float = 1e-14,
                max_iter: int = 50) -> np.ndarray | None:
        """Gauss-Newton projection onto the joint zero set; ``None`` on failure."""
        if not fields:
            return x
        free = np.array([i not in self.pinned for i in range(len(x))])
        for _ in range(max_iter):
            try:
                F = np.array([f.value(x) for f in fields])
                if np.max(np.abs(F)) <= tol * (1.0 + np.max(np.abs(x))):
                    return x
                G = np.array([f.grad(x) for f in fields])[:, free]
            except (DomainError, ArithmeticError):
                return None
            step, *_ = np.linalg.lstsq(G, -F, rcond=None)
            x = x.copy()
            x[free] += step
            if not np.all(np.isfinite(x)):
                return None
        return None

    def on_manifold(self, fields: Sequence[CompiledField], count: int, valid=None) -> list[np.ndarray]:
        """``count`` points on the joint zero set of ``fields``.

        Raises:
            SamplerError: too many consecutive projections failed.
        """
        out = []
        fails = 0
        while len(out) < count:
            x = self.project(self.ambient(), fields)
            ok = x is not None and (valid is None or valid(x))
            if ok:
                out.append(x)
                fails = 0
            else:
                fails += 1
                if fails >= self.max_tries:
                    raise SamplerError(
                        f"could not reach the zero set after {fails} consecutive attempts; "
                        "adjust the sampling box")
        return out


def _evaluable(fields):
    def check(x):
        try:
            for f in fields:
                if not math.isfinite(f.value(x)):
                    return False
                f.grad(x)
        except (DomainError, ArithmeticError):
            return False
        return True
    return check


def _scaled(b, gf, gh):
    return abs(b) / max(1.0, float(np.linalg.norm(gf) * np.linalg.norm(gh)))


# ---- reports -------------------------------------------------------------------

@dataclass
class ReductionReport:
    """Outcome of a numerical verification.

    Attributes:
        claim: Functions, Hamiltonian and chart under test (as strings).
        verdict: Human-readable verdict string.
        on_manifold_residual: Max scaled ``|{f, H}|`` over zero-set samples.
        off_manifold_residual: Max scaled ``|{f, H}|`` at each offset distance.
        coefficient_estimates: Least-squares fit of ``a`` per sample at each offset.
        coefficient_fit_residual: Largest misfit of ``{f,H} = a f`` in the fit.
        coefficient_stability: Largest change of ``a`` between the two smallest offsets.
        min_singular_value: Smallest singular value of normalised gradient stacks.
        samples: On-manifold sample points (chart order).
        dynamic_max: ``max_t |f(t)|`` along a short trajectory from a sample.
        notes: Reasons behind the verdict.
    """

    claim: dict
    verdict: str
    on_manifold_residual: float = math.nan
    off_manifold_residual: dict = field(default_factory=dict)
    coefficient_estimates: dict = field(default_factory=dict)
    pointwise_ratios: dict = field(default_factory=dict)
    coefficient_fit_residual: float = math.nan
    coefficient_stability: float = math.nan
    min_singular_value: float = math.nan
    pair_residuals: dict = field(default_factory=dict)
    samples: list = field(default_factory=list)
    dynamic_max: float | None = None
    notes: list = field(default_factory=list)

    @property
    def positive(self) -> bool:
        return self.verdict in ("particular integral", "global integral", "particular involution")

    def to_dict(self) -> dict:
        def num(v):
            return None if v is None or (isinstance(v, float) and math.isnan(v)) else float(v)

        return {
            "claim": self.claim,
            "verdict": self.verdict,
            "positive": self.positive,
            "on_manifold_residual": num(self.on_manifold_residual),
            "off_manifold_residual": {f"{k:g}": num(v) for k, v in self.off_manifold_residual.items()},
            "coefficient_fit_residual": num(self.coefficient_fit_residual),
            "coefficient_stability": num(self.coefficient_stability),
            "min_singular_value": num(self.min_singular_value),
            "pair_residuals": {k: num(v) for k, v in self.pair_residuals.items()},
            "dynamic_max": num(self.dynamic_max),
            "samples": len(self.samples),
            "notes": list(self.notes),
        }


def _min_singular(grads: np.ndarray) -> float:
    norms = np.linalg.norm(grads, axis=1)
    if np.any(norms == 0):
        return 0.0
    return float(np.linalg.svd(grads / norms[:, None], compute_uv=False)[-1])


def _dynamic_check(H, f, chart, x, steps, dt):
    if steps <= 0:
        return None, None
    traj = integrate(H, chart.point(x), IntegratorSpec(dt=dt, steps=steps), {"f": f})
    note = None if traj.completed else f"dynamic check stopped early: {traj.error}"
    return float(np.nanmax(np.abs(traj.observables["f"]))), note


# ---- particular integrals -----------------------------------------------------

def verify_particular_integral(f, H, chart: Chart, sampler: BoxSampler, samples: int = 40,
                               tol: float = ON_MANIFOLD_TOL, offsets: Sequence[float] = OFFSETS,
                               dynamic_steps: int = 200, dynamic_dt: float = 1e-3) -> ReductionReport:
    """Test ``{f, H} = a f`` near and on ``f = 0``.

    On-manifold residuals are ``|{f,H}| / max(1, |df||dH|)``.  Off the zero
    set, points ``x0 +- delta n`` (``n`` the unit normal) give ``a`` by least
    squares per sample; the estimate must settle as ``delta`` shrinks.
    Verdicts: ``"global integral"`` (residual small everywhere sampled),
    ``"particular integral"`` or ``"not a particular integral"``.
    """
    f, H = as_expression(f), as_expression(H)
    cf, ch = chart.compiled(f), chart.compiled(H)
    claim = {"f": str(f), "H": str(H), "chart": chart.name}
    points = sampler.on_manifold([cf], samples, valid=_evaluable([cf, ch]))
    report = ReductionReport(claim, "not a particular integral", samples=[p.copy() for p in points])
    n = chart.n

    on = 0.0
    for x in points:
        gf, gh = cf.grad(x), ch.grad(x)
        on = max(on, _scaled(bracket_from_gradients(gf, gh, n), gf, gh))
    report.on_manifold_residual = on
    if on > tol:
        report.notes.append(f"{{f,H}} does not vanish on f=0 (max scaled residual {on:.3g} > {tol:g})")
        return report

    offsets = sorted(offsets, reverse=True)
    fits = {d: [] for d in offsets}
    ratios = {d: [] for d in offsets}
    off = {d: 0.0 for d in offsets}
    misfit = 0.0
    for x in points:
        gf = cf.grad(x)
        normal = gf / np.linalg.norm(gf)
        for d in offsets:
            fv, bv = [], []
            for s in (1.0, -1.0):
                y = x + s * d * normal
                try:
                    gfy, ghy = cf.grad(y), ch.grad(y)
                    fy = cf.value(y)
                except (DomainError, ArithmeticError):
                    continue
                by = bracket_from_gradients(gfy, ghy, n)
                off[d] = max(off[d], _scaled(by, gfy, ghy))
                fv.append(fy)
                bv.append(by)
                if abs(fy) > 1e-12:
                    ratios[d].append(by / fy)
            fv, bv = np.array(fv), np.array(bv)
            if len(fv) and np.dot(fv, fv) > 0:
                a = float(np.dot(bv, fv) / np.dot(fv, fv))
                fits[d].append(a)
                misfit = max(misfit, float(np.max(np.abs(bv - a * fv))) / max(1.0, abs(a)))
            else:
                fits[d].append(math.nan)
    report.off_manifold_residual = off
    report.coefficient_estimates = {d: np.array(v) for d, v in fits.items()}
    report.pointwise_ratios = {d: np.array(v) for d, v in ratios.items()}
    report.coefficient_fit_residual = misfit

    a_small, a_prev = np.array(fits[offsets[-1]]), np.array(fits[offsets[-2]])
    finite = np.all(np.isfinite(a_small)) and np.all(np.isfinite(a_prev))
    stability = float(np.max(np.abs(a_small - a_prev) / (1.0 + np.abs(a_small)))) if finite else math.inf
    report.coefficient_stability = stability

    dyn, note = _dynamic_check(H, f, chart, points[0], dynamic_steps, dynamic_dt)
    report.dynamic_max = dyn
    if note:
        report.notes.append(note)

    if max(off.values()) <= tol:
        report.verdict = "global integral"
        report.notes.append("bracket vanishes at every sampled point (a = 0)")
    elif finite and stability <= STABILITY_TOL:
        report.verdict = "particular integral"
        report.notes.append("bracket vanishes on f=0; fitted coefficient a is finite and stable")
    else:
        report.notes.append(f"coefficient estimate unstable under refinement ({stability:.3g})")
    return report


def _same(a: Expression, b: Expression) -> bool:
    return a == b or str(a) == str(b)


def verify_involution_numeric(fs: Sequence, H, chart: Chart, sampler: BoxSampler, samples: int = 40,
                              tol: float = ON_MANIFOLD_TOL,
                              independence_tol: float = INDEPENDENCE_TOL) -> ReductionReport:
    """Check that ``fs`` (plus ``H``) are in particular involution on their joint zero set.

    More than ``n`` functions are rejected outright.  Members equal to ``H``
    are treated as the energy (not as a constraint).  Every pairwise scaled
    bracket must vanish on the zero set, and the row-normalised gradient
    stack must have smallest singular value above ``independence_tol``.
    """
    fs = [as_expression(f) for f in fs]
    H = as_expression(H)
    claim = {"fs": [str(f) for f in fs], "H": str(H), "chart": chart.name}
    report = ReductionReport(claim, "not in particular involution")
    if len(fs) > chart.n:
        report.notes.append(
            f"{len(fs)} functions exceed n = {chart.n}: at most n independent functions "
            "can be in particular involution")
        return report
    members = list(fs) if any(_same(f, H) for f in fs) else [H] + list(fs)
    constraints = [f for f in fs if not _same(f, H)]
    cm = [chart.compiled(f) for f in members]
    cc = [chart.compiled(f) for f in constraints]
    points = sampler.on_manifold(cc, samples, valid=_evaluable(cm))
    report.samples = [p.copy() for p in points]
    n = chart.n
    names = ["H" if _same(f, H) else str(f) for f in members]
    worst = {}
    smin = math.inf
    for x in points:
        grads = np.array([c.grad(x) for c in cm])
        for i, j in itertools.combinations(range(len(cm)), 2):
            r = _scaled(bracket_from_gradients(grads[i], grads[j], n), grads[i], grads[j])
            key = f"{{{names[i]}, {names[j]}}}"
            worst[key] = max(worst.get(key, 0.0), r)
        smin = min(smin, _min_singular(grads))
    report.pair_residuals = worst
    report.on_manifold_residual = max(worst.values()) if worst else 0.0
    report.min_singular_value = smin
    ok = True
    if report.on_manifold_residual > tol:
        bad = [k for k, v in worst.items() if v > tol]
        report.notes.append(f"brackets not vanishing on the zero set: {', '.join(bad)}")
        ok = False
    if smin <= independence_tol:
        report.notes.append(f"functions are dependent on the zero set (min singular value {smin:.3g})")
        ok = False
    if ok:
        report.verdict = "particular involution"
        report.notes.append("all pairwise brackets vanish on the joint zero set; gradients independent")
    return report


# ---- N-body momentum matching --------------------------------------------------

def _nbody_params(model: Model):
    try:
        return model.params["N"], model.params["d"], model.params["masses"]
    except KeyError:
        raise PreconditionViolation(f"model {model.name!r} is not a Cartesian N-body model") from None


def momentum_checks(model: Model, x) -> tuple[float, float]:
    """Scaled size of the total linear and angular momentum at ``x``."""
    N, d, masses = _nbody_params(model)
    v = np.asarray(getattr(x, "values", x), dtype=float)
    r, p = v[: N * d].reshape(N, d), v[N * d :].reshape(N, d)
    P = p.sum(axis=0)
    L = r.T @ p - p.T @ r
    scale_p = max(1.0, float(np.abs(p).max()))
    scale_l = max(1.0, float(np.abs(r).max() * np.abs(p).max()))
    return float(np.abs(P).max()) / scale_p, float(np.abs(L).max()) / scale_l


@dataclass(frozen=True)
class MomentumMatch:
    rho: np.ndarray
    prho: np.ndarray
    residual: float
    condition: float

    def state(self) -> np.ndarray:
        return np.concatenate((self.rho, self.prho))


def _kinetic_matrix(N, masses, rho):
    # H_rho is quadratic in the momenta, so its p-Hessian is the kinetic matrix
    qn, pn = rho_names(N)
    fn = rho_hamiltonian(N, list(masses)).compile(qn + pn)
    _, _, hess = fn.jet(np.concatenate((rho, np.zeros(len(rho)))))
    k = len(rho)
    return hess[k:, k:]


def match_reduced_momenta(full_state, model: Model, tol: float = 1e-10) -> MomentumMatch:
    """Map a zero-momentum Cartesian N-body state to ``(rho, p_rho)``.

    ``p_rho`` solves ``dH_rho/dp_rho (rho, p_rho) = {rho_ij, H}`` in the
    least-squares sense; the residual is reported.

    Raises:
        PreconditionViolation: total linear or angular momentum is not zero.
        RankDeficient: the kinetic matrix is singular (degenerate configuration).
    """
    N, d, masses = _nbody_params(model)
    Pn, Ln = momentum_checks(model, full_state)
    if Pn > tol:
        raise PreconditionViolation(f"total linear momentum is not zero (scaled {Pn:.3g} > {tol:g})")
    if Ln > tol:
        raise PreconditionViolation(f"total angular momentum is not zero (scaled {Ln:.3g} > {tol:g})")
    v = np.asarray(getattr(full_state, "values", full_state), dtype=float)
    r = v[: N * d].reshape(N, d)
    rho = pair_rho(r)
    gh = model.chart.compiled(model.hamiltonian).grad(v)
    n = model.chart.n
    qn, _ = coordinate_names(N, d)
    rhodot = np.empty(len(rho))
    for k, (i, j) in enumerate(pairs(N)):
        g = np.zeros(2 * n)
        # gradient of rho_ij = |r_i - r_j|^2 with respect to the coordinates
        diff = 2.0 * (r[i - 1] - r[j - 1])
        g[(i - 1) * d:(i - 1) * d + d] = diff
        g[(j - 1) * d:(j - 1) * d + d] = -diff
        rhodot[k] = bracket_from_gradients(g, gh, n)
    M = _kinetic_matrix(N, masses, rho)
    sv = np.linalg.svd(M, compute_uv=False)
    cond = float(sv[-1] / sv[0]) if sv[0] > 0 else 0.0
    if cond < 1e-10:
        raise RankDeficient(f"kinetic matrix is singular at this configuration (rcond {cond:.3g})")
    prho, *_ = np.linalg.lstsq(M, rhodot, rcond=None)
    res = float(np.max(np.abs(M @ prho - rhodot))) / max(1.0, float(np.abs(rhodot).max()))
    return MomentumMatch(rho, prho, res, cond)


def zero_momentum_state(positions, momenta, masses) -> tuple[np.ndarray, np.ndarray]:
    """Shift to zero total momentum and remove the rigid rotation (zero angular momentum).

    Positions are moved to the centre-of-mass frame.  The rotation removed
    solves ``I(omega) = L`` for the antisymmetric angular velocity in any
    dimension.
    """
    r = np.asarray(positions, dtype=float).copy()
    p = np.asarray(momenta, dtype=float).copy()
    m = np.asarray(masses, dtype=float)
    N, d = r.shape
    r -= (m[:, None] * r).sum(axis=0) / m.sum()
    p -= m[:, None] * p.sum(axis=0) / m.sum()
    planes = list(itertools.combinations(range(d), 2))
    if not planes:
        return r, p
    # momentum of the rotation generated by plane (a, b): m_i (e_a r_b - e_b r_a)
    basis = []
    for a, b in planes:
        W = np.zeros((d, d))
        W[a, b], W[b, a] = 1.0, -1.0
        basis.append(m[:, None] * (r @ W.T))
    def ang(q):
        L = r.T @ q - q.T @ r
        return np.array([L[a, b] for a, b in planes])
    A = np.array([ang(B) for B in basis]).T
    w, *_ = np.linalg.lstsq(A, ang(p), rcond=None)
    for c, B in zip(w, basis):
        p -= c * B
    return r, p


def cartesian_from_rho_velocity(positions, rho_dot, masses):
    """Momenta realising the given ``drho_ij/dt`` with zero total and angular momentum."""
    r = np.asarray(positions, dtype=float)
    m = np.asarray(masses, dtype=float)
    N, d = r.shape
    rows, rhs = [], []
    for k, (i, j) in enumerate(pairs(N)):
        row = np.zeros((N, d))
        diff = 2.0 * (r[i - 1] - r[j - 1])
        row[i - 1] += diff / m[i - 1]
        row[j - 1] -= diff / m[j - 1]
        rows.append(row.ravel())
        rhs.append(rho_dot[k])
    for a in range(d):
        row = np.zeros((N, d))
        row[:, a] = 1.0
        rows.append(row.ravel())
        rhs.append(0.0)
    for a, b in itertools.combinations(range(d), 2):
        row = np.zeros((N, d))
        row[:, b] += r[:, a]
        row[:, a] -= r[:, b]
        rows.append(row.ravel())
        rhs.append(0.0)
    sol, *_ = np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=None)
    return sol.reshape(N, d)


# ---- full vs reduced -------------------------------------------------------------

@dataclass
class ComparisonReport:
    """Agreement between the Cartesian flow and the reduced flow(s).

    ``max_relative_deviation[name]`` is ``max_t |rho_full - rho_red| / |rho_full|``
    per pair; ``energy_*`` compare the internal energy with ``H_rho``.
    """

    N: int
    d: int
    pair_names: list
    max_relative_deviation: dict
    max_deviation: float
    energy_internal: float
    energy_reduced: float
    energy_mismatch: float
    match_residual: float
    volume_deviation: float | None = None
    volume_match_residual: float | None = None
    times: np.ndarray | None = None
    rho_full: np.ndarray | None = None
    rho_reduced: np.ndarray | None = None
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "d": self.d,
            "max_relative_deviation": {k: float(v) for k, v in self.max_relative_deviation.items()},
            "max_deviation": float(self.max_deviation),
            "energy_internal": float(self.energy_internal),
            "energy_reduced": float(self.energy_reduced),
            "energy_mismatch": float(self.energy_mismatch),
            "match_residual": float(self.match_residual),
            "volume_deviation": None if self.volume_deviation is None else float(self.volume_deviation),
            "volume_match_residual": (None if self.volume_match_residual is None
                                      else float(self.volume_match_residual)),
            "notes": list(self.notes),
        }


def compare_full_vs_reduced(N: int, V, full_state, spec: IntegratorSpec, masses=None, d: int = 3,
                            volume: bool = False, match_tol: float = 1e-8) -> ComparisonReport:
    """Integrate the Cartesian system and ``H_rho`` from matched data and compare ``rho_ij(t)``.

    ``V`` is written in ``r_ij`` / ``rho_ij`` (or, with ``volume=True``, may
    also use ``V1..V{N-1}``).  With ``volume=True`` the volume Hamiltonian is
    integrated as well (unit masses); its momenta come from ``p_rho = J^T P``
    solved by least squares, which requires the state to lie on the volume
    reduction's invariant set.

    Raises:
        PreconditionViolation: nonzero momenta, or a momentum map residual
            above ``match_tol``.
        IntegrationAborted: one of the integrations failed.
    """
    masses = tuple(float(m) for m in (masses or (1.0,) * N))
    V = as_expression(V) if V is not None else None
    if volume:
        if any(m != 1.0 for m in masses):
            raise PreconditionViolation("the volume representation assumes unit masses")
        vol_subs = volume_expressions(N) if V is not None else {}
        V_rho = V.substitute({k: e for k, e in vol_subs.items() if k in V.free_symbols}) if V else None
    else:
        V_rho = V
    full = nbody_cartesian(N, d, masses, V_rho)
    x0 = full.chart.point(np.asarray(getattr(full_state, "values", full_state), dtype=float))
    match = match_reduced_momenta(x0, full)
    if match.residual > match_tol:
        raise PreconditionViolation(
            f"momentum map residual {match.residual:.3g} exceeds {match_tol:g}; comparison invalid")

    traj_full = integrate(full.hamiltonian, x0, spec).raise_for_error()
    qn, pn = rho_names(N)
    chart_rho = Chart(f"HRNrho-N{N}", qn, pn, {f"m{i + 1}": m for i, m in enumerate(masses)})
    H_rho = rho_hamiltonian(N, None, V_rho)
    traj_red = integrate(H_rho, chart_rho.point(match.state()), spec).raise_for_error()

    k = len(qn)
    nd = N * d
    rho_full = np.array([pair_rho(s[:nd].reshape(N, d)) for s in traj_full.states])
    rho_red = traj_red.states[:, :k]
    rel = np.abs(rho_full - rho_red) / np.abs(rho_full)
    per = {name: float(rel[:, i].max()) for i, name in enumerate(qn)}

    M = sum(masses)
    p0 = x0.values[nd:].reshape(N, d)
    E_full = float(traj_full.observables["H"][0])
    E_int = E_full - float(np.sum(p0.sum(axis=0) ** 2)) / (2 * M)
    E_red = float(traj_red.observables["H"][0])
    report = ComparisonReport(
        N, d, qn, per, max(per.values()), E_int, E_red,
        abs(E_int - E_red) / max(1.0, abs(E_int)), match.residual,
        times=traj_full.times, rho_full=rho_full, rho_reduced=rho_red,
    )

    if volume:
        J = volume_jacobian(N, match.rho)
        P, *_ = np.linalg.lstsq(J.T, match.prho, rcond=None)
        vres = float(np.max(np.abs(J.T @ P - match.prho))) / max(1.0, float(np.abs(match.prho).max()))
        report.volume_match_residual = vres
        if vres > match_tol:
            raise PreconditionViolation(
                f"p_rho is not of the form J^T P (residual {vres:.3g}); the state is off the "
                "volume representation's invariant set")
        vq, vp = volume_names(N)
        chart_vol = Chart(f"vol-N{N}", vq, vp)
        V_vol = None
        if V is not None:
            raise_if = set(V.free_symbols) - set(vq)
            if raise_if:
                raise PreconditionViolation(
                    f"for the volume leg the potential must use V1..V{N - 1} only, got {sorted(raise_if)}")
            V_vol = V
        vv0 = volume_variables(N, match.rho).as_array()
        traj_vol = integrate(vol_hamiltonian(N, V_vol), chart_vol.point(np.concatenate((vv0, P))),
                             spec).raise_for_error()
        vol_full = np.array([volume_variables(N, r).as_array() for r in rho_full])
        vol_red = traj_vol.states[:, : N - 1]
        report.volume_deviation = float(np.max(np.abs(vol_full - vol_red) / np.abs(vol_full)))
    return report


# ---- reduction ladder -------------------------------------------------------------

@dataclass(frozen=True)
class LadderRung:
    """One restriction ``K -> K|_{f=0}`` with the dropped coordinate.

    ``condition_holds`` reports whether ``dK/df = b f`` (so the dropped
    coordinate is constant on ``f = 0`` and the restricted system is
    Hamiltonian); ``method`` says whether this was decided exactly
    (``"symbolic"``) or by sampling (``"numeric"``).
    """

    momentum: str
    coordinate: str
    hamiltonian: Expression
    chart: Chart
    condition_holds: bool
    method: str
    coordinate_remains: bool
    coefficient: str | None = None


def _condition_symbolic(K: Expression, f: str):
    dK = poly_from_expression(K).diff(f)
    red = module_reduce(dK, [SparsePoly.var(f)])
    return red.remainder.is_zero(), str(red.coefficients[0]) if red.remainder.is_zero() else None


def _condition_numeric(K: Expression, f: str, chart: Chart, seed: int, samples: int = 50):
    ck = chart.compiled(K)
    sampler = BoxSampler(chart, {f: (0.0, 0.0)}, seed)
    idx = chart.index(f)
    pts = sampler.on_manifold([], samples, valid=_evaluable([ck]))
    worst = max(abs(ck.grad(x)[idx]) / max(1.0, np.linalg.norm(ck.grad(x))) for x in pts)
    return worst <= ON_MANIFOLD_TOL


def reduced_ladder(chart: Chart, H, momenta: Sequence[str], seed: int = 0) -> list[LadderRung]:
    """Successively restrict ``H`` to ``f = 0`` for each chart momentum ``f`` in turn.

    Raises:
        NotAMomentumCoordinate: an entry is not one of the current chart's momenta.
    """
    K = as_expression(H)
    chart.check_expression(K)
    rungs = []
    current = chart
    for f in momenta:
        name = str(f).strip()
        if name not in current.p_names:
            raise NotAMomentumCoordinate(
                f"{name!r} is not a momentum of chart {current.name!r} "
                f"(momenta: {', '.join(current.p_names)})")
        q = current.conjugate(name)
        try:
            holds, coeff = _condition_symbolic(K, name)
            method = "symbolic"
        except NotPolynomial:
            holds, coeff = _condition_numeric(K, name, current, seed), None
            method = "numeric"
        K = K.substitute({name: 0})
        keep_q = [s for s in current.q_names if s != q]
        keep_p = [s for s in current.p_names if s != name]
        remains = q in K.free_symbols
        reduced = current
        if keep_q and not remains:
            reduced = Chart(f"{current.name}|{name}=0", keep_q, keep_p, current.constants)
        rungs.append(LadderRung(name, q, K, reduced, holds, method, remains, coeff))
        current = reduced
    return rungs

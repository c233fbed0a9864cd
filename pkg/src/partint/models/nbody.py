"""N bodies in R^d interacting through a potential of the relative distances.

Cartesian chart naming: for ``d <= 3`` particle ``i`` (1-based) has
coordinates ``x{i}, y{i}, z{i}`` and momenta ``px{i}, py{i}, pz{i}``; for
larger ``d`` the names are ``q{i}_{k}`` / ``p{i}_{k}``.  The potential may use
``r{i}{j}`` (distance) or ``rho{i}{j}`` (squared distance) with ``i < j``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from partint.errors import ChartError
from partint.expr import Const, Expression, as_expression, parse
from partint.models.base import Model
from partint.poisson import Chart

_AXES = "xyz"


def pair_suffix(i: int, j: int, N: int) -> str:
    """Suffix of pair ``(i, j)`` in variable names: ``12`` or ``1_12`` once N >= 10."""
    return f"{i}{j}" if N < 10 else f"{i}_{j}"


def pairs(N: int) -> list[tuple[int, int]]:
    """Canonical pair order (1,2), (1,3), ..., (1,N), (2,3), ..., (N-1,N)."""
    return list(itertools.combinations(range(1, N + 1), 2))


def coordinate_names(N: int, d: int) -> tuple[list[list[str]], list[list[str]]]:
    """Per-particle coordinate and momentum names, particle-major order."""
    if d <= 3:
        q = [[f"{_AXES[k]}{i}" for k in range(d)] for i in range(1, N + 1)]
        p = [[f"p{_AXES[k]}{i}" for k in range(d)] for i in range(1, N + 1)]
    else:
        q = [[f"q{i}_{k + 1}" for k in range(d)] for i in range(1, N + 1)]
        p = [[f"p{i}_{k + 1}" for k in range(d)] for i in range(1, N + 1)]
    return q, p


def _axis_label(k: int, d: int) -> str:
    return _AXES[k] if d <= 3 else str(k + 1)


def _masses(N, masses) -> tuple[float, ...]:
    if masses is None:
        return (1.0,) * N
    masses = tuple(float(m) for m in masses)
    if len(masses) != N:
        raise ValueError(f"expected {N} masses, got {len(masses)}")
    if any(m <= 0 for m in masses):
        raise ValueError("masses must be positive")
    return masses


def nbody_cartesian(N: int, d: int = 3, masses: Sequence[float] | None = None, V=None,
                    constants: dict | None = None) -> Model:
    """Cartesian N-body Hamiltonian ``sum p_i^2 / (2 m_i) + V``.

    Registered observables: total momentum components ``P<axis>`` and the
    angular-momentum components ``L<a><b>`` for every coordinate plane (a, b).
    Masses are bound as chart constants ``m1..mN``.

    Raises:
        ChartError: if ``V`` uses symbols that are neither pair distances nor
            entries of ``constants``.
    """
    if N < 1 or d < 1:
        raise ValueError("need N >= 1 and d >= 1")
    masses = _masses(N, masses)
    constants = dict(constants or {})
    qn, pn = coordinate_names(N, d)
    consts = {f"m{i + 1}": m for i, m in enumerate(masses)}
    consts.update(constants)
    chart = Chart(f"HN-N{N}-d{d}", [s for row in qn for s in row],
                  [s for row in pn for s in row], consts)

    kinetic = " + ".join(
        f"({' + '.join(f'{s}^2' for s in pn[i])})/(2*m{i + 1})" for i in range(N)
    )
    H = parse(kinetic)
    if V is not None:
        V = as_expression(V)
        subs = {}
        for i, j in pairs(N):
            sq = " + ".join(f"({qn[i - 1][k]} - {qn[j - 1][k]})^2" for k in range(d))
            sfx = pair_suffix(i, j, N)
            subs[f"rho{sfx}"] = parse(sq)
            subs[f"r{sfx}"] = parse(f"sqrt({sq})")
        extra = set(V.free_symbols) - set(subs) - set(consts)
        if extra:
            raise ChartError(f"potential uses symbols {sorted(extra)} that are not pair distances")
        if N == 1 and set(V.free_symbols) & set(subs):
            raise ChartError("a single body has no pair distances")
        H = H + V.substitute(subs)

    obs = {}
    for k in range(d):
        obs[f"P{_axis_label(k, d)}"] = parse(" + ".join(pn[i][k] for i in range(N)))
    for a, b in itertools.combinations(range(d), 2):
        name = f"L{_axis_label(a, d)}{_axis_label(b, d)}"
        obs[name] = parse(" + ".join(
            f"{qn[i][a]}*{pn[i][b]} - {qn[i][b]}*{pn[i][a]}" for i in range(N)))
    return Model(chart.name, chart, H, obs, box={},
                 description=f"{N} bodies in R^{d}, Cartesian chart",
                 params={"N": N, "d": d, "masses": masses})


def state_array(model: Model, N: int, d: int, x) -> tuple[np.ndarray, np.ndarray]:
    """Split a Cartesian phase vector into ``(positions, momenta)`` of shape (N, d)."""
    v = np.asarray(getattr(x, "values", x), dtype=float)
    return v[: N * d].reshape(N, d), v[N * d :].reshape(N, d)


def jacobi_matrix(masses: Sequence[float]) -> np.ndarray:
    """Orthogonal ``N x N`` matrix acting on mass-weighted positions ``sqrt(m_i) r_i``.

    Row 0 gives ``sqrt(M) R`` (normalised centre of mass), row ``k`` the Jacobi
    vector ``sqrt(M_k m_{k+1} / M_{k+1}) (r_{k+1} - R_k)`` where ``M_k`` and
    ``R_k`` are the mass and centre of mass of the first ``k`` bodies.
    """
    m = np.asarray(masses, dtype=float)
    N = len(m)
    O = np.zeros((N, N))
    cum = np.cumsum(m)
    O[0] = np.sqrt(m / cum[-1])
    for k in range(1, N):
        Mk, Mk1 = cum[k - 1], cum[k]
        O[k, k] = np.sqrt(Mk / Mk1)
        O[k, :k] = -np.sqrt(m[k] * m[:k] / (Mk * Mk1))
    return O


@dataclass(frozen=True)
class JacobiCoordinates:
    """Normalised centre of mass ``sqrt(M) R`` plus ``N - 1`` Jacobi vectors.

    With momenta present, ``center_momentum = P / sqrt(M)`` and
    ``2T = |center_momentum|^2 + sum |momenta_k|^2``.
    """

    center: np.ndarray
    vectors: np.ndarray
    center_momentum: np.ndarray | None = None
    momenta: np.ndarray | None = None


def jacobi_transform(positions, masses, momenta=None) -> JacobiCoordinates:
    r = np.atleast_2d(np.asarray(positions, dtype=float))
    N = r.shape[0]
    if N < 2:
        raise ValueError("Jacobi coordinates need at least two bodies")
    m = np.asarray(masses, dtype=float)
    O = jacobi_matrix(m)
    sq = np.sqrt(m)[:, None]
    y = O @ (sq * r)
    if momenta is None:
        return JacobiCoordinates(y[0], y[1:])
    w = O @ (np.asarray(momenta, dtype=float) / sq)
    return JacobiCoordinates(y[0], y[1:], w[0], w[1:])


def inverse_jacobi_transform(jc: JacobiCoordinates, masses):
    """Return ``(positions, momenta)``; momenta is ``None`` if ``jc`` has none."""
    m = np.asarray(masses, dtype=float)
    O = jacobi_matrix(m)
    sq = np.sqrt(m)[:, None]
    y = np.vstack([jc.center[None, :], jc.vectors])
    r = (O.T @ y) / sq
    if jc.momenta is None:
        return r, None
    w = np.vstack([jc.center_momentum[None, :], jc.momenta])
    return r, (O.T @ w) * sq


def pair_rho(positions) -> np.ndarray:
    """Squared distances in canonical pair order."""
    r = np.asarray(positions, dtype=float)
    N = r.shape[0]
    return np.array([np.sum((r[i - 1] - r[j - 1]) ** 2) for i, j in pairs(N)])

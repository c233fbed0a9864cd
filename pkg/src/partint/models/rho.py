"""Reduced N-body Hamiltonian in squared relative distances ``rho_ij = r_ij^2``.

On the zero-angular-momentum manifold the relative motion is governed by::

    H_rho = sum_{i<j} 2 (m_i + m_j)/(m_i m_j) rho_ij p_ij^2
          + sum_i sum_{j<k; j,k != i} (2/m_i)(rho_ij + rho_ik - rho_jk) p_ij p_ik
          + V(rho)

Chart variables are ``rho12, rho13, ..., prho12, prho13, ...`` in the
canonical pair order of :func:`partint.models.nbody.pairs`.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np

from partint.errors import ChartError
from partint.expr import Const, Expression, as_expression, parse
from partint.models.base import Model
from partint.models.nbody import pair_suffix, pairs
from partint.poisson import Chart


def rho_names(N: int) -> tuple[list[str], list[str]]:
    sfx = [pair_suffix(i, j, N) for i, j in pairs(N)]
    return [f"rho{s}" for s in sfx], [f"prho{s}" for s in sfx]


def _pair(i, j, N):
    return pair_suffix(min(i, j), max(i, j), N)


def rho_kinetic_text(N: int) -> str:
    """Kinetic part of ``H_rho`` as source text, masses as symbols ``m1..mN``."""
    if N < 2:
        raise ValueError("the rho representation needs N >= 2")
    terms = []
    for i, j in pairs(N):
        s = _pair(i, j, N)
        terms.append(f"2*(m{i} + m{j})/(m{i}*m{j})*rho{s}*prho{s}^2")
    for i in range(1, N + 1):
        others = [j for j in range(1, N + 1) if j != i]
        for a, j in enumerate(others):
            for k in others[a + 1:]:
                ij, ik, jk = _pair(i, j, N), _pair(i, k, N), _pair(j, k, N)
                terms.append(f"2/m{i}*(rho{ij} + rho{ik} - rho{jk})*prho{ij}*prho{ik}")
    return " + ".join(terms)


def _mass_node(m):
    if isinstance(m, (int, Fraction)) and not isinstance(m, bool):
        return Const(Fraction(m))
    return Const(float(m))


def rho_potential(N: int, V) -> Expression:
    """Rewrite a potential in ``r_ij`` and/or ``rho_ij`` in terms of ``rho_ij`` only."""
    V = as_expression(V)
    subs = {}
    for i, j in pairs(N):
        s = pair_suffix(i, j, N)
        subs[f"r{s}"] = parse(f"sqrt(rho{s})")
    return V.substitute({k: v for k, v in subs.items() if k in V.free_symbols})


def rho_hamiltonian(N: int, masses: Sequence | None = None, V=None) -> Expression:
    """General-N ``H_rho`` as an expression in ``(rho_ij, prho_ij)``.

    With ``masses=None`` the result keeps symbolic masses ``m1..mN``.
    Integer or :class:`~fractions.Fraction` masses are inserted exactly, so
    the result converts to an exact polynomial.  ``V`` may be written in
    ``r_ij`` or ``rho_ij``.
    """
    H = parse(rho_kinetic_text(N))
    if masses is not None:
        if len(masses) != N:
            raise ValueError(f"expected {N} masses, got {len(masses)}")
        if any(m <= 0 for m in masses):
            raise ValueError("masses must be positive")
        H = H.substitute({f"m{i + 1}": _mass_node(m) for i, m in enumerate(masses)})
    if V is not None:
        H = H + rho_potential(N, V)
    return H


def random_simplex(rng: np.random.Generator, N: int, d: int | None = None, scale: float = 1.0) -> np.ndarray:
    """``N`` Gaussian points in ``R^d`` (default ``d = N - 1``), shape ``(N, d)``."""
    d = N - 1 if d is None else d
    return scale * rng.standard_normal((N, max(d, 1)))


def _simplex_rho(rng, N):
    from partint.models.nbody import pair_rho

    while True:
        rho = pair_rho(random_simplex(rng, N))
        if rho.min() > 0.05:
            return rho


def rho_model(N: int, masses: Sequence[float] | None = None, V=None) -> Model:
    """``H_rho`` on its own chart with masses bound as constants ``m1..mN``."""
    masses = tuple(float(m) for m in (masses or (1.0,) * N))
    if len(masses) != N:
        raise ValueError(f"expected {N} masses, got {len(masses)}")
    q, p = rho_names(N)
    consts = {f"m{i + 1}": m for i, m in enumerate(masses)}
    chart = Chart(f"HRNrho-N{N}", q, p, consts)
    H = rho_hamiltonian(N, None, V)
    try:
        chart.check_expression(H)
    except ChartError as exc:
        raise ChartError(f"potential for H_rho: {exc}") from None
    n = len(q)

    def sampler(rng):
        return np.concatenate((_simplex_rho(rng, N), rng.uniform(-1.0, 1.0, n)))

    return Model(chart.name, chart, H, box={s: (0.5, 1.5) for s in q},
                 description=f"{N}-body rho representation (zero angular momentum)",
                 sampler=sampler)

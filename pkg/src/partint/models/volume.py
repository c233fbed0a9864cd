"""Volume variables of the interaction simplex and the volume Hamiltonians.

``V_k`` is the sum of squared contents of all ``k``-dimensional faces
spanned by ``k + 1`` of the ``N`` bodies: ``V_1`` is the sum of the
``rho_ij``, ``V_{N-1}`` the squared content of the whole simplex.  Squared
contents come from Cayley-Menger determinants::

    content^2 = (-1)^(k+1) / (2^k (k!)^2) * det(CM)

with ``CM`` the bordered matrix of squared distances of the ``k + 1`` points.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from partint.dual import Jet
from partint.expr import Expression, as_expression, parse
from partint.models.base import Model
from partint.models.nbody import pair_rho, pair_suffix, pairs
from partint.models.rho import random_simplex, rho_names
from partint.poisson import Chart

VOL_RANGE = range(2, 7)

# Unit-mass volume Hamiltonians (kinetic parts), indexed by N.
_VOL_KINETIC = {
    2: "4*V1*P1^2",
    3: "6*V1*P1^2 + 1/2*V1*V2*P2^2 + 24*V2*P1*P2",
    4: ("8*V1*P1^2 + 1/2*(V1*V2 + 108*V3)*P2^2 + 2/9*V2*V3*P3^2"
        " + 32*V2*P1*P2 + 48*V3*P1*P3 + 2*V1*V3*P2*P3"),
    5: ("10*V1*P1^2 + 1/2*(V1*V2 + 135*V3)*P2^2 + 2/9*(V2*V3 + 12*V1*V4)*P3^2"
        " + 1/8*V3*V4*P4^2 + 40*V2*P1*P2 + 60*V3*P1*P3 + 80*V4*P1*P4"
        " + 2*(V1*V3 + 160*V4)*P2*P3 + 3*V1*V4*P2*P4 + 8/9*V2*V4*P3*P4"),
    6: ("12*V1*P1^2 + (1/2*V1*V2 + 81*V3)*P2^2"
        " + (2/9*V2*V3 + 8/3*V1*V4 + 2000/3*V5)*P3^2"
        " + (1/8*V3*V4 + 25/24*V2*V5)*P4^2 + 2/25*V4*V5*P5^2"
        " + 48*V2*P1*P2 + 72*V3*P1*P3 + 96*V4*P1*P4 + 120*V5*P1*P5"
        " + 2*(V1*V3 + 192*V4)*P2*P3 + (3*V1*V4 + 750*V5)*P2*P4 + 4*V1*V5*P2*P5"
        " + (8/9*V2*V4 + 100/9*V1*V5)*P3*P4 + 4/3*V2*V5*P3*P5 + 1/2*V3*V5*P4*P5"),
}


@dataclass(frozen=True)
class VolumeVector:
    """Volume variables ``V_1..V_{N-1}`` of one configuration."""

    N: int
    values: tuple

    def __getitem__(self, k: int):
        """1-based access: ``vv[1]`` is ``V_1``."""
        if not 1 <= k <= self.N - 1:
            raise IndexError(f"V_{k} does not exist for N={self.N}")
        return self.values[k - 1]

    def as_dict(self) -> dict:
        return {f"V{k + 1}": v for k, v in enumerate(self.values)}

    def as_array(self) -> np.ndarray:
        return np.array([float(v) for v in self.values])


def volume_names(N: int) -> tuple[list[str], list[str]]:
    return [f"V{k}" for k in range(1, N)], [f"P{k}" for k in range(1, N)]


# ---- determinants ------------------------------------------------------------

def _laplace_det(M) -> object:
    """Memoised cofactor expansion along rows; works for any commutative ring.

    Used for exact rationals and dual numbers (sizes here are at most 8 x 8,
    so the 2^n column subsets stay cheap).
    """
    n = len(M)

    @lru_cache(maxsize=None)
    def minor(row, cols):
        if row == n:
            return 1
        total = 0
        sign = 1
        for c in cols:
            a = M[row][c]
            if not (isinstance(a, (int, Fraction)) and a == 0):
                rest = tuple(x for x in cols if x != c)
                term = a * minor(row + 1, rest)
                total = total + term if sign > 0 else total - term
            sign = -sign
        return total

    return minor(0, tuple(range(n)))


def _lu_det(M) -> float:
    """Gaussian elimination with full pivoting, in double precision."""
    A = np.array(M, dtype=float)
    n = A.shape[0]
    det = 1.0
    for k in range(n):
        sub = np.abs(A[k:, k:])
        i, j = np.unravel_index(np.argmax(sub), sub.shape)
        i += k
        j += k
        if A[i, j] == 0.0:
            return 0.0
        if i != k:
            A[[k, i]] = A[[i, k]]
            det = -det
        if j != k:
            A[:, [k, j]] = A[:, [j, k]]
            det = -det
        det *= A[k, k]
        A[k + 1:, k:] -= np.outer(A[k + 1:, k] / A[k, k], A[k, k:])
    return det


def determinant(M):
    """Determinant dispatched on entry type.

    Exact rationals give a :class:`~fractions.Fraction`; floats use LU with
    full pivoting; anything else (dual numbers, polynomials) goes through
    cofactor expansion.
    """
    flat = [a for row in M for a in row]
    if all(isinstance(a, (int, Fraction)) for a in flat):
        return Fraction(_laplace_det(M))
    if all(isinstance(a, (int, Fraction, float, np.floating)) for a in flat):
        return _lu_det(M)
    return _laplace_det(M)


def cayley_menger_content2(D):
    """Squared content of the simplex with squared-distance matrix ``D``.

    ``D`` is ``(k+1) x (k+1)``, symmetric with zero diagonal.
    """
    m = len(D)
    k = m - 1
    if k == 0:
        return 0
    CM = [[0] + [1] * m]
    for i in range(m):
        CM.append([1] + [D[i][j] for j in range(m)])
    det = determinant(CM)
    exact = not isinstance(det, (float, np.floating, Jet))
    denom = (2**k) * math.factorial(k) ** 2
    scale = Fraction((-1) ** (k + 1), denom) if exact else (-1) ** (k + 1) / denom
    return det * scale


# ---- volume variables --------------------------------------------------------

def _rho_list(N, rho):
    names, _ = rho_names(N)
    if isinstance(rho, Mapping):
        rho = [rho[s] for s in names]
    rho = list(rho)
    if len(rho) != len(names):
        raise ValueError(f"N={N} needs {len(names)} rho values, got {len(rho)}")
    # integers stay exact
    return [Fraction(v) if isinstance(v, int) and not isinstance(v, bool) else v for v in rho]


def _triangle(a, b, c):
    # squared area from squared side lengths
    return (2 * a * b + 2 * a * c + 2 * b * c - a * a - b * b - c * c) / 16


def _explicit(N, r):
    """Closed forms for N <= 4; ``r`` maps pair tuples to squared distances."""
    if N == 2:
        return [r[1, 2]]
    V1 = sum(r[p] for p in pairs(N))
    if N == 3:
        return [V1, _triangle(r[1, 2], r[1, 3], r[2, 3])]
    r12, r13, r14, r23, r24, r34 = (r[p] for p in pairs(4))
    V2 = (_triangle(r12, r13, r23) + _triangle(r12, r14, r24)
          + _triangle(r13, r14, r34) + _triangle(r23, r24, r34))
    V3 = (r23 * r34 * r12 + r24 * r34 * r12 + r14 * r23 * r12 + r13 * r24 * r12
          + r13 * r34 * r12 + r14 * r34 * r12 + r13 * r14 * r23 + r13 * r14 * r24
          + r13 * r23 * r24 + r14 * r23 * r24 + r14 * r23 * r34 + r13 * r24 * r34
          - r14 * r23 * r23 - r13 * r24 * r24 - r14 * r14 * r23 - r34 * r12 * r12
          - r34 * r34 * r12 - r13 * r13 * r24 - r13 * r14 * r34 - r23 * r24 * r34
          - r13 * r23 * r12 - r14 * r24 * r12) / 144
    return [V1, V2, V3]


def _cayley_menger_sums(N, r):
    out = []
    for k in range(1, N):
        total = 0
        for face in itertools.combinations(range(1, N + 1), k + 1):
            D = [[0 if a == b else r[min(a, b), max(a, b)] for b in face] for a in face]
            total = total + cayley_menger_content2(D)
        out.append(total)
    return out


def volume_variables(N: int, rho, method: str = "auto") -> VolumeVector:
    """Volume variables from the ``rho_ij`` (sequence in pair order or name mapping).

    ``method`` is ``"auto"`` (closed forms for N <= 4, Cayley-Menger sums
    above), ``"explicit"`` or ``"cayley-menger"``.  Entries may be floats,
    exact rationals or dual numbers.  Realizability is not checked.
    """
    if N not in VOL_RANGE:
        raise ValueError(f"volume variables are provided for N in 2..6, got {N}")
    vals = _rho_list(N, rho)
    r = dict(zip(pairs(N), vals))
    if method == "auto":
        method = "explicit" if N <= 4 else "cayley-menger"
    if method == "explicit":
        if N > 4:
            raise ValueError("closed forms exist only for N <= 4")
        out = _explicit(N, r)
    elif method == "cayley-menger":
        out = _cayley_menger_sums(N, r)
    else:
        raise ValueError(f"unknown method {method!r}")
    return VolumeVector(N, tuple(out))


def volume_jacobian(N: int, rho) -> np.ndarray:
    """``dV_k / drho_ij`` as an ``(N-1) x N(N-1)/2`` array, via dual numbers."""
    vals = [float(v) for v in _rho_list(N, rho)]
    n = len(vals)
    jets = [Jet.variable(v, i, n) for i, v in enumerate(vals)]
    vv = volume_variables(N, jets)
    rows = []
    for v in vv.values:
        rows.append(v.grad if isinstance(v, Jet) else np.zeros(n))
    return np.array(rows)


def volume_polynomials(N: int, method: str = "auto") -> list:
    """``V_k`` as exact polynomials in the chart variables ``rho_ij``."""
    from partint.polyalg import SparsePoly

    names, _ = rho_names(N)
    return list(volume_variables(N, [SparsePoly.var(s) for s in names], method).values)


def volume_expressions(N: int) -> dict[str, Expression]:
    """``{"V1": ..., "V{N-1}": ...}`` as expressions in ``rho_ij``."""
    return {f"V{k + 1}": p.to_expression() for k, p in enumerate(volume_polynomials(N))}


# ---- Hamiltonians ------------------------------------------------------------

def vol_kinetic_text(N: int) -> str:
    if N not in VOL_RANGE:
        raise ValueError(f"volume Hamiltonians are provided for N in 2..6, got {N}")
    return _VOL_KINETIC[N]


def vol_hamiltonian(N: int, V=None) -> Expression:
    """Unit-mass volume Hamiltonian in ``(V_1..V_{N-1}, P_1..P_{N-1})`` plus ``V``."""
    H = parse(vol_kinetic_text(N))
    if V is not None:
        H = H + as_expression(V)
    return H


def vol_model(N: int, V=None) -> Model:
    q, p = volume_names(N)
    chart = Chart(f"vol-N{N}", q, p)
    H = vol_hamiltonian(N, V)
    chart.check_expression(H)

    def sampler(rng):
        while True:
            rho = pair_rho(random_simplex(rng, N))
            if rho.min() > 0.05:
                break
        vv = volume_variables(N, rho).as_array()
        return np.concatenate((vv, rng.uniform(-1.0, 1.0, N - 1)))

    return Model(chart.name, chart, H, description=f"{N}-body volume representation, unit masses",
                 sampler=sampler)

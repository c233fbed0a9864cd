"""Single particle in a rotationally invariant potential V(r).

Two charts: Cartesian ``(x, y, z | px, py, pz)`` and the non-orthogonal
chart ``(r, phi, rho | pr, pphi, prho)`` with ``r = |x|``,
``phi = atan2(y, x)`` and ``rho = sqrt(x^2 + y^2)``.  The reduction ladder
restricts the second Hamiltonian to ``pphi = 0`` (G) and then ``prho = 0`` (J).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from partint.errors import ChartError
from partint.expr import Expression, as_expression, parse
from partint.models.base import Model
from partint.poisson import Chart, PhasePoint

CARTESIAN_NAMES = (("x", "y", "z"), ("px", "py", "pz"))
CHART_NAMES = (("r", "phi", "rho"), ("pr", "pphi", "prho"))

K_KINETIC = "(prho^2 + pr^2 + 2*rho/r*prho*pr + pphi^2/rho^2)/(2*m)"
G_KINETIC = "(prho^2 + pr^2 + 2*rho/r*prho*pr)/(2*m)"
J_KINETIC = "pr^2/(2*m)"


def _potential(V) -> Expression:
    V = as_expression(V)
    extra = set(V.free_symbols) - {"r", "m"}
    if extra:
        raise ValueError(f"central potential must depend on r only, got symbols {sorted(extra)}")
    return V


@dataclass(frozen=True, eq=False)
class CentralForceModel:
    m: float
    V: Expression
    cartesian: Model
    spherical: Model

    @property
    def K(self) -> Expression:
        return self.spherical.hamiltonian

    @property
    def G(self) -> Expression:
        return self.spherical.hamiltonians["G"]

    @property
    def J(self) -> Expression:
        return self.spherical.hamiltonians["J"]

    @staticmethod
    def coordinates(X: float, Y: float, Z: float) -> tuple[float, float, float]:
        """Position part of the chart map: ``(r, phi, rho)``."""
        return math.sqrt(X * X + Y * Y + Z * Z), math.atan2(Y, X), math.hypot(X, Y)

    def to_chart(self, x: PhasePoint) -> PhasePoint:
        """Map a Cartesian phase point to ``(r, phi, rho | pr, pphi, prho)``.

        Momenta transform covariantly, ``P = (dQ/dq)^{-T} p``; the map is
        singular on the plane ``z = 0`` (where ``r = rho``) and on the z axis.
        """
        q, p = x.q, x.p
        X, Y, Z = q
        r, phi, rho = self.coordinates(X, Y, Z)
        if Z == 0.0 or rho == 0.0:
            raise ChartError("the (r, phi, rho) chart is singular on z = 0 and on the z axis")
        jac = np.array([
            [X / r, Y / r, Z / r],
            [-Y / rho**2, X / rho**2, 0.0],
            [X / rho, Y / rho, 0.0],
        ])
        P = np.linalg.solve(jac.T, p)
        return self.spherical.chart.point(np.concatenate(([r, phi, rho], P)))

    def from_chart(self, y: PhasePoint, z_sign: float = 1.0) -> PhasePoint:
        """Inverse of :meth:`to_chart` on the half space selected by ``z_sign``."""
        r, phi, rho = y.q
        X, Y = rho * math.cos(phi), rho * math.sin(phi)
        Z = math.copysign(math.sqrt(max(r * r - rho * rho, 0.0)), z_sign)
        jac = np.array([
            [X / r, Y / r, Z / r],
            [-Y / rho**2, X / rho**2, 0.0],
            [X / rho, Y / rho, 0.0],
        ])
        p = jac.T @ y.p
        return self.cartesian.chart.point(np.concatenate(([X, Y, Z], p)))


def central_force(m: float = 1.0, V="-1/r") -> CentralForceModel:
    """Build both charts of the central-force problem with mass ``m``."""
    V = _potential(V)
    consts = {"m": float(m)}
    cart_chart = Chart("hc", *CARTESIAN_NAMES, consts)
    sph_chart = Chart("hc2", *CHART_NAMES, consts)
    V_cart = V.substitute({"r": parse("sqrt(x^2 + y^2 + z^2)")})
    H = parse("(px^2 + py^2 + pz^2)/(2*m)") + V_cart
    K = parse(K_KINETIC) + V
    G = parse(G_KINETIC) + V
    J = parse(J_KINETIC) + V
    cart = Model(
        "hc",
        cart_chart,
        H,
        observables={
            "lx": parse("y*pz - z*py"),
            "ly": parse("z*px - x*pz"),
            "lz": parse("x*py - y*px"),
        },
        box={"x": (-2.0, 2.0), "y": (-2.0, 2.0), "z": (0.3, 2.0)},
        description="particle in a central potential, Cartesian chart",
    )
    sph = Model(
        "hc2",
        sph_chart,
        K,
        observables={"pphi": parse("pphi"), "prho": parse("prho")},
        hamiltonians={"K": K, "G": G, "J": J},
        box={"r": (1.0, 2.0), "phi": (-math.pi, math.pi), "rho": (0.3, 0.9)},
        description="particle in a central potential, non-orthogonal (r, phi, rho) chart",
    )
    return CentralForceModel(float(m), V, cart, sph)


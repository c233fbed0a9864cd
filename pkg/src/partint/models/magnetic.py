"""Planar two-body Coulomb pair in a constant perpendicular magnetic field.

Chart ``(Rx, Ry, rx, ry | Kx, Ky, px, py)``: centre-of-mass position and
pseudomomentum, relative position and momentum.  With ``M = m1 + m2``,
``mu = m1 m2 / M`` and ``e_eff = e (m1 - m2) / M``::

    H_CM       = K^2 / (2 M)
    H_coupling = (e / M) (B x K) . r
    H_rel      = (p - (e_eff / 2) B x r)^2 / (2 mu) + e^2 B^2 r^2 / (2 M) - e^2 / r

The coupling term vanishes identically at K = 0, which is what makes the
relative angular momentum ``lz`` a particular integral there.
"""

from __future__ import annotations

from partint.expr import parse
from partint.models.base import Model
from partint.poisson import Chart

Q_NAMES = ("Rx", "Ry", "rx", "ry")
P_NAMES = ("Kx", "Ky", "px", "py")

_M = "(m1 + m2)"
_MU = "(m1*m2/(m1 + m2))"
_EEFF = "(e*(m1 - m2)/(m1 + m2))"

H_CM = f"(Kx^2 + Ky^2)/(2*{_M})"
H_COUPLING = f"e/{_M}*B*(Kx*ry - Ky*rx)"
H_KINETIC_REL = f"((px + {_EEFF}*B*ry/2)^2 + (py - {_EEFF}*B*rx/2)^2)/(2*{_MU})"
H_DIAMAGNETIC = f"e^2*B^2*(rx^2 + ry^2)/(2*{_M})"
H_COULOMB = "e^2/sqrt(rx^2 + ry^2)"


def magnetic_pair(m1: float = 1.0, m2: float = 1.0, e: float = 1.0, B: float = 1.0,
                  diamagnetic: bool = True, coulomb: bool = True) -> Model:
    """Hamiltonian ``H = H_CM + H_coupling + H_rel`` for the charged pair.

    ``diamagnetic`` and ``coulomb`` switch off the ``e^2 B^2 r^2`` and
    ``-e^2/r`` terms, respectively (used for limiting-case checks).
    """
    if m1 <= 0 or m2 <= 0:
        raise ValueError("masses must be positive")
    chart = Chart("Hmf", Q_NAMES, P_NAMES, {"m1": m1, "m2": m2, "e": e, "B": B})
    rel = H_KINETIC_REL
    if diamagnetic:
        rel += " + " + H_DIAMAGNETIC
    if coulomb:
        rel += " - " + H_COULOMB
    parts = {"H_CM": parse(H_CM), "H_coupling": parse(H_COUPLING), "H_rel": parse(rel)}
    H = parse(f"{H_CM} + {H_COUPLING} + {rel}")
    observables = {
        "lz": parse("rx*py - ry*px"),
        "Kx": parse("Kx"),
        "Ky": parse("Ky"),
    }
    box = {"Rx": (-1.0, 1.0), "Ry": (-1.0, 1.0), "rx": (-2.0, 2.0), "ry": (-2.0, 2.0)}
    return Model("Hmf", chart, H, observables, parts, box,
                 "charged two-body pair in a constant magnetic field (planar)")

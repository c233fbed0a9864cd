"""Named model registry used by scripts and the command line.

Every entry lists its parameters with types and defaults; :func:`build`
accepts either typed values or the raw strings read from a config file.

=========  ==============================================  ======================
name       chart variable ordering                         parameters
=========  ==============================================  ======================
hc         x y z | px py pz                                m, V (in r)
hc2        r phi rho | pr pphi prho                        m, V (in r)
Hmf        Rx Ry rx ry | Kx Ky px py                       m1, m2, e, B
HN         x1 y1 z1 x2 ... | px1 py1 pz1 px2 ...           N, d, masses, V
HRNrho     rho12 rho13 ... | prho12 prho13 ...             N, masses, V
vol-N<k>   V1 .. V{k-1} | P1 .. P{k-1}   (k = 2..6)      V
=========  ==============================================  ======================

Aliases: ``central-force`` (hc2), ``central-force-cartesian`` (hc),
``magnetic-pair`` (Hmf), ``nbody`` (HN), ``rho`` (HRNrho).

``hc2`` also carries the reduced Hamiltonians ``G`` (at ``pphi = 0``) and
``J`` (additionally at ``prho = 0``), selectable by name wherever a
Hamiltonian is expected.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from partint.models.base import Model
from partint.models.central import central_force
from partint.models.magnetic import magnetic_pair
from partint.models.nbody import nbody_cartesian
from partint.models.rho import rho_model
from partint.models.volume import vol_model


def _floats(text):
    if isinstance(text, str):
        return tuple(float(s) for s in text.replace(",", " ").split())
    return tuple(float(s) for s in text)


def _bool(text):
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass(frozen=True)
class Param:
    name: str
    convert: Callable
    default: object
    doc: str = ""


@dataclass(frozen=True)
class Entry:
    name: str
    builder: Callable[..., Model]
    params: tuple[Param, ...]
    description: str


_CENTRAL = (Param("m", float, 1.0, "mass"), Param("V", str, "-1/r", "potential in r"))

CATALOG: dict[str, Entry] = {
    "hc": Entry("hc", lambda **kw: central_force(**kw).cartesian, _CENTRAL,
                "central potential, Cartesian chart"),
    "hc2": Entry("hc2", lambda **kw: central_force(**kw).spherical, _CENTRAL,
                 "central potential, (r, phi, rho) chart with reduced G and J"),
    "Hmf": Entry("Hmf", magnetic_pair, (
        Param("m1", float, 1.0), Param("m2", float, 1.0), Param("e", float, 1.0),
        Param("B", float, 1.0), Param("diamagnetic", _bool, True), Param("coulomb", _bool, True),
    ), "planar charged pair in a constant magnetic field"),
    "HN": Entry("HN", nbody_cartesian, (
        Param("N", int, 3), Param("d", int, 3), Param("masses", _floats, None),
        Param("V", str, None, "potential in r_ij / rho_ij"),
    ), "N bodies in R^d, Cartesian chart"),
    "HRNrho": Entry("HRNrho", rho_model, (
        Param("N", int, 3), Param("masses", _floats, None), Param("V", str, None),
    ), "rho representation of the N-body problem at zero angular momentum"),
}
for _N in range(2, 7):
    CATALOG[f"vol-N{_N}"] = Entry(
        f"vol-N{_N}", (lambda N: lambda **kw: vol_model(N, **kw))(_N), (Param("V", str, None),),
        f"volume representation of the {_N}-body problem, unit masses")

ALIASES = {
    "central-force": "hc2",
    "central-force-cartesian": "hc",
    "magnetic-pair": "Hmf",
    "nbody": "HN",
    "rho": "HRNrho",
}


def resolve_name(name: str) -> str:
    return ALIASES.get(name, name)


def names() -> list[str]:
    return list(CATALOG)


def build(name: str, **params) -> Model:
    """Construct catalog model ``name``; unknown parameters raise ``KeyError``."""
    try:
        entry = CATALOG[resolve_name(name)]
    except KeyError:
        raise KeyError(f"unknown model {name!r}; available: {', '.join(CATALOG)}") from None
    known = {p.name: p for p in entry.params}
    unknown = set(params) - set(known)
    if unknown:
        raise KeyError(f"model {name!r} has no parameters {sorted(unknown)}")
    kwargs = {}
    for p in entry.params:
        if p.name in params and params[p.name] is not None:
            v = params[p.name]
            kwargs[p.name] = p.convert(v) if isinstance(v, str) or p.convert is _floats else v
        else:
            kwargs[p.name] = p.default
    return entry.builder(**kwargs)

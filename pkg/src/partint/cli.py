"""Command-line front end: ``partint <command> [--config FILE] [options]``.

Commands: ``simulate``, ``verify-integral``, ``verify-involution``,
``compare-reduction``, ``bracket`` and ``catalog``.

Settings come from an INI file (sections ``[run]``, ``[model]``,
``[initial-state]``, ``[integrator]``, ``[observables]``, ``[verify]``,
``[output]``) and are overridden by flags.  Any unrecognised ``--NAME VALUE``
pair is passed to the model as a parameter, so ``--model nbody --N 3`` works.

Exit status: 0 success, 1 invalid input or failed precondition, 2 runtime
failure (integration or sampling), 3 negative verification verdict.
"""

from __future__ import annotations

import argparse
import configparser
import json
import math
import os
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from partint.dynamics import IntegratorSpec, drift_report, integrate
from partint.errors import (
    ChartError,
    DomainError,
    ExprError,
    IntegrationAborted,
    NonConvergence,
    NotAMomentumCoordinate,
    NotPolynomial,
    PartintError,
    PreconditionViolation,
    RankDeficient,
    SamplerError,
    SeparabilityViolation,
)
from partint.models import catalog
from partint.models.base import Model
from partint.poisson import poisson_bracket
from partint.polyalg import poly_from_expression, poly_poisson
from partint.reduction import (
    BoxSampler,
    compare_full_vs_reduced,
    verify_involution_numeric,
    verify_particular_integral,
    zero_momentum_state,
)

COMMANDS = ("simulate", "verify-integral", "verify-involution", "compare-reduction", "bracket", "catalog")
OUTPUT_ENV = "PARTINT_OUTPUT_DIR"

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME, EXIT_NEGATIVE = 0, 1, 2, 3


class ConfigError(PartintError):
    """Malformed or inconsistent run configuration."""


@dataclass
class RunConfig:
    command: str
    model: str | None = None
    params: dict = field(default_factory=dict)
    state: dict = field(default_factory=dict)
    integrator: dict = field(default_factory=dict)
    observables: list = field(default_factory=list)
    verify: dict = field(default_factory=dict)
    output: str | None = None
    report: str | None = None
    seed: int = 0
    source: dict = field(default_factory=dict)

    def where(self, key: str) -> str:
        """Location of a setting for diagnostics (``file:line [section] key`` or the flag)."""
        return self.source.get(key, f"setting {key!r}")


# ---- configuration ----------------------------------------------------------------

def _key_lines(path: Path) -> dict:
    """Map ``(section, key)`` to 1-based line numbers of an INI file."""
    lines = {}
    section = None
    for n, line in enumerate(path.read_text().splitlines(), 1):
        s = line.strip()
        m = re.match(r"\[([^\]]+)\]", s)
        if m:
            section = m.group(1).strip()
        elif section and s and s[0] not in "#;":
            key = re.split(r"[=:]", s, maxsplit=1)[0].strip().lower()
            lines[(section, key)] = n
    return lines


def _read_file(path: str, cfg: RunConfig) -> None:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file {path!r} not found")
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(p.read_text(), source=str(p))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    lines = {(s, k.lower()): v for (s, k), v in _key_lines(p).items()}

    def note(section, key, target):
        ln = lines.get((section, key.lower()))
        cfg.source[target] = f"{path}:{ln} [{section}] {key}" if ln else f"{path} [{section}] {key}"

    known = {"run", "model", "initial-state", "integrator", "observables", "verify", "output"}
    for section in parser.sections():
        if section not in known:
            ln = lines.get((section, next(iter(parser[section]), "").lower()))
            raise ConfigError(f"{path}: unknown section [{section}]" + (f" near line {ln}" if ln else ""))
    if parser.has_section("run"):
        for k, v in parser["run"].items():
            note("run", k, k)
            if k == "command":
                if v != cfg.command:
                    raise ConfigError(f"{cfg.where(k)}: file is for command {v!r}, not {cfg.command!r}")
            elif k == "seed":
                cfg.seed = _int(v, cfg.where(k))
            else:
                raise ConfigError(f"{cfg.where(k)}: unknown key")
    if parser.has_section("model"):
        for k, v in parser["model"].items():
            note("model", k, "model" if k == "name" else k)
            if k == "name":
                cfg.model = v
            else:
                cfg.params[k] = v
    if parser.has_section("initial-state"):
        for k, v in parser["initial-state"].items():
            note("initial-state", k, f"state.{k}")
            cfg.state[k] = v
    if parser.has_section("integrator"):
        for k, v in parser["integrator"].items():
            note("integrator", k, f"integrator.{k}")
            cfg.integrator[k.replace("_", "-")] = v
    if parser.has_section("observables"):
        for k, v in parser["observables"].items():
            note("observables", k, f"observable.{k}")
            cfg.observables.append((k, v))
    if parser.has_section("verify"):
        for k, v in parser["verify"].items():
            note("verify", k, f"verify.{k}")
            cfg.verify[k] = v
    if parser.has_section("output"):
        for k, v in parser["output"].items():
            note("output", k, f"output.{k}")
            if k == "path":
                cfg.output = v
            elif k == "report":
                cfg.report = v
            elif k == "format":
                if v != "tsv":
                    raise ConfigError(f"{cfg.where('output.format')}: only 'tsv' output is supported")
            else:
                raise ConfigError(f"{cfg.where(f'output.{k}')}: unknown key")


def _int(text, where):
    try:
        v = int(str(text), 0)
    except ValueError:
        raise ConfigError(f"{where}: expected an integer, got {text!r}") from None
    if not 0 <= v < 2**64:
        raise ConfigError(f"{where}: seed must be a 64-bit unsigned integer")
    return v


def _float(text, where):
    try:
        return float(text)
    except (TypeError, ValueError):
        raise ConfigError(f"{where}: expected a number, got {text!r}") from None


def _assignments(items, flag):
    out = {}
    for item in items or ():
        if "=" not in item:
            raise ConfigError(f"{flag} {item!r}: expected NAME=VALUE")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="partint", description="Particular integrals and reduced Hamiltonian dynamics.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="INI file with run settings")
        p.add_argument("--seed", help="seed for every random draw")
        p.add_argument("--output", help="trajectory table path")
        p.add_argument("--report", help="report path (default: standard output)")

    def model_flags(p, name="--model"):
        p.add_argument(name, dest="model", help="catalog model name")
        p.add_argument("--param", action="append", metavar="NAME=VALUE", help="model parameter")
        p.add_argument("--set", action="append", metavar="NAME=VALUE", help="initial-state value")

    def integrator_flags(p):
        p.add_argument("--scheme")
        p.add_argument("--dt")
        p.add_argument("--steps")
        p.add_argument("--newton-tol")
        p.add_argument("--newton-max-iter")

    p = sub.add_parser("simulate", help="integrate a model and write its trajectory")
    common(p)
    model_flags(p)
    integrator_flags(p)
    p.add_argument("--H", help="Hamiltonian (catalog name or expression)")
    p.add_argument("--observe", action="append", metavar="EXPR", help="observable to record")
    p.add_argument("--sample", action="store_true", help="draw the initial state from the model sampler")

    p = sub.add_parser("verify-integral", help="numerically test a particular integral")
    common(p)
    model_flags(p)
    p.add_argument("--f")
    p.add_argument("--H")
    p.add_argument("--samples")
    p.add_argument("--box", action="append", metavar="NAME=LO:HI")

    p = sub.add_parser("verify-involution", help="numerically test a particular involution")
    common(p)
    model_flags(p)
    p.add_argument("--fs", help="comma-separated functions")
    p.add_argument("--H")
    p.add_argument("--samples")
    p.add_argument("--box", action="append", metavar="NAME=LO:HI")

    p = sub.add_parser("compare-reduction", help="Cartesian N-body flow versus the rho (and volume) flow")
    common(p)
    model_flags(p)
    integrator_flags(p)
    p.add_argument("--volume", action="store_true", help="also integrate the volume Hamiltonian")

    p = sub.add_parser("bracket", help="Poisson bracket of two functions")
    common(p)
    model_flags(p, "--chart")
    p.add_argument("--f")
    p.add_argument("--g")
    p.add_argument("--symbolic", action="store_true", help="exact polynomial bracket")

    p = sub.add_parser("catalog", help="list builtin models")
    common(p)
    return ap


def _split_extra(extra: list[str]) -> dict:
    params = {}
    i = 0
    while i < len(extra):
        tok = extra[i]
        if not tok.startswith("--") or len(tok) < 3:
            raise ConfigError(f"unexpected argument {tok!r}")
        name = tok[2:]
        if "=" in name:
            name, value = name.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(extra):
                raise ConfigError(f"model parameter --{name} needs a value")
            value = extra[i + 1]
            i += 2
        params[name] = value
    return params


def parse_config(argv: list[str]) -> RunConfig:
    ap = _build_parser()
    try:
        args, extra = ap.parse_known_args(argv)
    except SystemExit as exc:
        raise ConfigError("invalid command line (see usage above)") from exc if exc.code else None
    cfg = RunConfig(args.command)
    if args.config:
        _read_file(args.config, cfg)
    if args.seed is not None:
        cfg.seed = _int(args.seed, "--seed")
        cfg.source["seed"] = "--seed"
    if getattr(args, "model", None):
        cfg.model = args.model
        cfg.source["model"] = "--model"
    for k, v in {**_assignments(getattr(args, "param", None), "--param"), **_split_extra(extra)}.items():
        cfg.params[k] = v
        cfg.source[k] = f"--{k}"
    for k, v in _assignments(getattr(args, "set", None), "--set").items():
        cfg.state[k] = v
        cfg.source[f"state.{k}"] = f"--set {k}"
    for k in ("scheme", "dt", "steps", "newton_tol", "newton_max_iter"):
        v = getattr(args, k, None)
        if v is not None:
            key = k.replace("_", "-")
            cfg.integrator[key] = v
            cfg.source[f"integrator.{key}"] = f"--{key}"
    for k in ("f", "g", "H", "fs", "samples"):
        v = getattr(args, k, None)
        if v is not None:
            cfg.verify[k] = v
            cfg.source[f"verify.{k}"] = f"--{k}"
    if getattr(args, "box", None):
        cfg.verify["box"] = ",".join(args.box)
    for flag in ("symbolic", "volume", "sample"):
        if getattr(args, flag, False):
            cfg.verify[flag] = "true"
    for i, e in enumerate(getattr(args, "observe", None) or ()):
        cfg.observables.append((e, e))
        cfg.source[f"observable.{e}"] = "--observe"
    if args.output:
        cfg.output = args.output
    if args.report:
        cfg.report = args.report
    return cfg


# ---- helpers ----------------------------------------------------------------------

def _model(cfg: RunConfig, default: str | None = None) -> Model:
    name = cfg.model or default
    if name is None:
        raise ConfigError("no model selected (use --model or [model] name)")
    canonical = catalog.resolve_name(name)
    if canonical not in catalog.CATALOG:
        raise ConfigError(f"{cfg.where('model')}: unknown model {name!r}; "
                          f"available: {', '.join(catalog.names())}")
    entry = catalog.CATALOG[canonical]
    known = {p.name for p in entry.params}
    for k in cfg.params:
        if k not in known:
            raise ConfigError(f"{cfg.where(k)}: model {canonical!r} has no parameter {k!r} "
                              f"(parameters: {', '.join(sorted(known)) or 'none'})")
    try:
        return catalog.build(canonical, **cfg.params)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"model {canonical!r}: {exc}") from None


def _resolve(model: Model, text, where: str):
    try:
        return model.resolve(text)
    except (ExprError, ChartError) as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _spec(cfg: RunConfig, default_steps=1000, default_dt=1e-3) -> IntegratorSpec:
    it = dict(cfg.integrator)
    allowed = {"scheme", "dt", "steps", "newton-tol", "newton-max-iter"}
    for k in it:
        if k not in allowed:
            raise ConfigError(f"{cfg.where(f'integrator.{k}')}: unknown integrator key")
    kw = {}
    if "scheme" in it:
        kw["scheme"] = it["scheme"]
    kw["dt"] = _float(it.get("dt", default_dt), cfg.where("integrator.dt"))
    steps = it.get("steps", default_steps)
    try:
        kw["steps"] = int(str(steps))
    except ValueError:
        raise ConfigError(f"{cfg.where('integrator.steps')}: expected an integer, got {steps!r}") from None
    if "newton-tol" in it:
        kw["newton_tol"] = _float(it["newton-tol"], cfg.where("integrator.newton-tol"))
    if "newton-max-iter" in it:
        kw["newton_max_iter"] = int(it["newton-max-iter"])
    try:
        return IntegratorSpec(**kw)
    except ValueError as exc:
        raise ConfigError(f"integrator: {exc}") from None


def _initial_point(cfg: RunConfig, model: Model, rng: np.random.Generator):
    chart = model.chart
    unknown = [k for k in cfg.state if k not in chart.names]
    if unknown:
        k = unknown[0]
        raise ConfigError(f"{cfg.where(f'state.{k}')}: {k!r} is not a variable of chart {chart.name!r} "
                          f"(variables: {', '.join(chart.names)})")
    if cfg.verify.get("sample") == "true":
        sampler = BoxSampler.for_model(model, int(rng.integers(2**63)))
        base = sampler.ambient()
    else:
        base = np.zeros(len(chart.names))
    for k, v in cfg.state.items():
        base[chart.index(k)] = _float(v, cfg.where(f"state.{k}"))
    return chart.point(base)


def _parse_box(text: str | None) -> dict:
    box = {}
    if not text:
        return box
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            name, rng = item.split("=", 1)
            lo, hi = rng.split(":", 1)
            box[name.strip()] = (float(lo), float(hi))
        except ValueError:
            raise ConfigError(f"box entry {item!r}: expected NAME=LO:HI") from None
    return box


def _fmt(v) -> str:
    return "%.17g" % v


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def format_report(title: str, lines: list[str], data: dict) -> str:
    """Human-readable block followed by a JSON machine block."""
    out = [title, "=" * len(title)]
    out.extend(lines)
    out.append("--- machine-readable ---")
    out.append(json.dumps(_jsonable(data), sort_keys=True, indent=2))
    return "\n".join(out) + "\n"


def write_trajectory(path: Path, traj) -> None:
    names = list(traj.chart.names)
    obs = [k for k in traj.observables]
    header = ["t"] + names + obs
    rows = ["\t".join(header)]
    for i, t in enumerate(traj.times):
        vals = [t, *traj.states[i], *(traj.observables[k][i] for k in obs)]
        rows.append("\t".join(_fmt(v) for v in vals))
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(rows) + "\n")


def _out_path(cfg: RunConfig, given: str | None, default_name: str | None) -> Path | None:
    base = os.environ.get(OUTPUT_ENV)
    if given:
        p = Path(given)
        return p if p.is_absolute() or not base else Path(base) / p
    if base and default_name:
        return Path(base) / default_name
    return None


def _emit(cfg: RunConfig, text: str, stdout) -> None:
    path = _out_path(cfg, cfg.report, f"{cfg.command}-report.txt")
    if path is None:
        stdout.write(text)
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)


# ---- commands ---------------------------------------------------------------------

def cmd_catalog(cfg: RunConfig) -> tuple[int, str]:
    lines, data = [], {}
    for name in catalog.names():
        entry = catalog.CATALOG[name]
        model = entry.builder(**{p.name: p.default for p in entry.params})
        q, p = model.chart.q_names, model.chart.p_names
        params = ", ".join(f"{x.name}={x.default}" for x in entry.params) or "none"
        lines.append(f"{name}: {entry.description}")
        lines.append(f"  chart {model.chart.name}: {' '.join(q)} | {' '.join(p)}")
        lines.append(f"  parameters: {params}")
        if model.observables:
            lines.append(f"  observables: {', '.join(model.observables)}")
        if model.hamiltonians:
            lines.append(f"  hamiltonians: {', '.join(model.hamiltonians)}")
        data[name] = {
            "description": entry.description,
            "chart": model.chart.name,
            "coordinates": list(q),
            "momenta": list(p),
            "parameters": {x.name: x.default for x in entry.params},
            "observables": list(model.observables),
            "hamiltonians": list(model.hamiltonians),
        }
    aliases = ", ".join(f"{a} -> {b}" for a, b in catalog.ALIASES.items())
    lines.append(f"aliases: {aliases}")
    data = {"models": data, "aliases": dict(catalog.ALIASES)}
    return EXIT_OK, format_report("partint catalog", lines, data)


def cmd_simulate(cfg: RunConfig) -> tuple[int, str]:
    model = _model(cfg)
    rng = np.random.default_rng(cfg.seed)
    spec = _spec(cfg)
    H = _resolve(model, cfg.verify.get("H", "H"), cfg.where("verify.H"))
    x0 = _initial_point(cfg, model, rng)
    obs = {}
    for name, text in cfg.observables:
        obs[name] = _resolve(model, text, cfg.where(f"observable.{name}"))
    try:
        traj = integrate(H, x0, spec, obs)
    except SeparabilityViolation as exc:
        raise ConfigError(f"{cfg.where('integrator.scheme')}: {exc}") from None
    out = _out_path(cfg, cfg.output, "simulate-trajectory.tsv")
    if out is not None:
        write_trajectory(out, traj)
    rep = drift_report(traj)
    lines = [
        f"model: {model.name}",
        f"scheme: {spec.scheme}, dt = {_fmt(spec.dt)}, steps = {spec.steps}",
        f"completed steps: {len(traj) - 1}",
        f"energy: initial {_fmt(rep.energy_initial)}, max relative drift {_fmt(rep.energy_drift)}",
    ]
    for o in rep.observables:
        kind = "relative change" if o.relative else "max |f|"
        lines.append(f"observable {o.name}: initial {_fmt(o.initial)}, {kind} {_fmt(o.residual)}"
                     + (" FLAGGED" if o.flagged else ""))
    if out is not None:
        lines.append(f"trajectory: {out.name}")
    data = {"model": model.name, "scheme": spec.scheme, "dt": spec.dt, "steps": spec.steps,
            "drift": rep.to_dict(), "seed": cfg.seed}
    status = EXIT_OK
    if traj.error is not None:
        lines.append(f"error: {traj.error}")
        data["error"] = str(traj.error)
        status = EXIT_RUNTIME
    return status, format_report("partint simulate", lines, data)


def _reduction_lines(rep) -> list[str]:
    lines = [f"verdict: {rep.verdict}"]
    if not math.isnan(rep.on_manifold_residual):
        lines.append(f"on-manifold residual: {_fmt(rep.on_manifold_residual)}")
    for d, v in rep.off_manifold_residual.items():
        lines.append(f"off-manifold residual at distance {d:g}: {_fmt(v)}")
    if not math.isnan(rep.coefficient_stability):
        lines.append(f"coefficient stability: {_fmt(rep.coefficient_stability)}")
    if not math.isnan(rep.min_singular_value):
        lines.append(f"min singular value: {_fmt(rep.min_singular_value)}")
    for k, v in rep.pair_residuals.items():
        lines.append(f"bracket {k}: {_fmt(v)}")
    if rep.dynamic_max is not None:
        lines.append(f"trajectory max |f|: {_fmt(rep.dynamic_max)}")
    lines.extend(f"note: {n}" for n in rep.notes)
    return lines


def _samples(cfg):
    n = int(cfg.verify.get("samples", 40))
    if n < 1:
        raise ConfigError(f"{cfg.where('verify.samples')}: need at least one sample")
    return n


def cmd_verify_integral(cfg: RunConfig) -> tuple[int, str]:
    model = _model(cfg)
    if "f" not in cfg.verify:
        raise ConfigError("verify-integral needs a function (--f or [verify] f)")
    f = _resolve(model, cfg.verify["f"], cfg.where("verify.f"))
    H = _resolve(model, cfg.verify.get("H", "H"), cfg.where("verify.H"))
    box = _parse_box(cfg.verify.get("box"))
    try:
        sampler = BoxSampler.for_model(model, cfg.seed, box)
    except SamplerError as exc:
        raise ConfigError(str(exc)) from None
    rep = verify_particular_integral(f, H, model.chart, sampler, samples=_samples(cfg))
    data = rep.to_dict()
    data["seed"] = cfg.seed
    text = format_report("partint verify-integral", [f"f: {f}", f"H: {cfg.verify.get('H', 'H')}",
                                                     f"chart: {model.chart.name}"] + _reduction_lines(rep), data)
    return (EXIT_OK if rep.positive else EXIT_NEGATIVE), text


def cmd_verify_involution(cfg: RunConfig) -> tuple[int, str]:
    model = _model(cfg)
    if "fs" not in cfg.verify:
        raise ConfigError("verify-involution needs functions (--fs or [verify] fs)")
    items = [s.strip() for s in cfg.verify["fs"].split(",") if s.strip()]
    fs = [_resolve(model, s, cfg.where("verify.fs")) for s in items]
    H = _resolve(model, cfg.verify.get("H", "H"), cfg.where("verify.H"))
    box = _parse_box(cfg.verify.get("box"))
    sampler = BoxSampler.for_model(model, cfg.seed, box)
    rep = verify_involution_numeric(fs, H, model.chart, sampler, samples=_samples(cfg))
    data = rep.to_dict()
    data["seed"] = cfg.seed
    text = format_report("partint verify-involution",
                         [f"functions: {', '.join(items)}", f"chart: {model.chart.name}"]
                         + _reduction_lines(rep), data)
    return (EXIT_OK if rep.positive else EXIT_NEGATIVE), text


def cmd_compare(cfg: RunConfig) -> tuple[int, str]:
    model = _model(cfg, "HN")
    if "N" not in model.params:
        raise ConfigError(f"compare-reduction needs a Cartesian N-body model, got {model.name!r}")
    N, d, masses = model.params["N"], model.params["d"], model.params["masses"]
    V = cfg.params.get("V")
    spec = _spec(cfg)
    rng = np.random.default_rng(cfg.seed)
    if cfg.state:
        x0 = _initial_point(cfg, model, rng).values
    else:
        r = rng.standard_normal((N, d))
        p = 0.3 * rng.standard_normal((N, d))
        r, p = zero_momentum_state(r, p, masses)
        x0 = np.concatenate((r.ravel(), p.ravel()))
    rep = compare_full_vs_reduced(N, V, x0, spec, masses=masses, d=d,
                                  volume=cfg.verify.get("volume") == "true")
    lines = [f"N = {N}, d = {d}, V = {V}", f"scheme: {spec.scheme}, dt = {_fmt(spec.dt)}, steps = {spec.steps}",
             f"max relative rho deviation: {_fmt(rep.max_deviation)}"]
    for k, v in rep.max_relative_deviation.items():
        lines.append(f"  {k}: {_fmt(v)}")
    lines.append(f"internal energy {_fmt(rep.energy_internal)}, H_rho {_fmt(rep.energy_reduced)}, "
                 f"mismatch {_fmt(rep.energy_mismatch)}")
    lines.append(f"momentum map residual: {_fmt(rep.match_residual)}")
    if rep.volume_deviation is not None:
        lines.append(f"max relative volume-variable deviation: {_fmt(rep.volume_deviation)}")
    data = rep.to_dict()
    data["seed"] = cfg.seed
    out = _out_path(cfg, cfg.output, None)
    if out is not None:
        header = ["t"] + [f"{k}_full" for k in rep.pair_names] + [f"{k}_reduced" for k in rep.pair_names]
        rows = ["\t".join(header)]
        for i, t in enumerate(rep.times):
            rows.append("\t".join(_fmt(v) for v in [t, *rep.rho_full[i], *rep.rho_reduced[i]]))
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text("\n".join(rows) + "\n")
    return EXIT_OK, format_report("partint compare-reduction", lines, data)


def cmd_bracket(cfg: RunConfig) -> tuple[int, str]:
    model = _model(cfg)
    for k in ("f", "g"):
        if k not in cfg.verify:
            raise ConfigError(f"bracket needs --{k}")
    f = _resolve(model, cfg.verify["f"], cfg.where("verify.f"))
    g = _resolve(model, cfg.verify["g"], cfg.where("verify.g"))
    lines = [f"f: {cfg.verify['f']}", f"g: {cfg.verify['g']}", f"chart: {model.chart.name}"]
    data = {"chart": model.chart.name, "f": str(f), "g": str(g)}
    if cfg.verify.get("symbolic") == "true":
        try:
            br = poly_poisson(poly_from_expression(f), poly_from_expression(g), model.chart)
        except NotPolynomial as exc:
            raise ConfigError(f"--symbolic needs polynomial inputs: {exc}") from None
        lines.append(f"{{f, g}} = {br}")
        data["bracket"] = str(br)
    else:
        rng = np.random.default_rng(cfg.seed)
        x = _initial_point(cfg, model, rng) if cfg.state else model.chart.point(
            BoxSampler.for_model(model, cfg.seed).ambient())
        v = poisson_bracket(f, g, x)
        lines.append(f"point: " + ", ".join(f"{k}={_fmt(val)}" for k, val in x.as_dict().items()))
        lines.append(f"{{f, g}} = {_fmt(v)}")
        data["point"] = x.as_dict()
        data["value"] = v
    return EXIT_OK, format_report("partint bracket", lines, data)


HANDLERS = {
    "simulate": cmd_simulate,
    "verify-integral": cmd_verify_integral,
    "verify-involution": cmd_verify_involution,
    "compare-reduction": cmd_compare,
    "bracket": cmd_bracket,
    "catalog": cmd_catalog,
}

_INVALID = (ConfigError, ExprError, ChartError, PreconditionViolation, RankDeficient,
            NotAMomentumCoordinate, SeparabilityViolation, NotPolynomial)
_RUNTIME = (NonConvergence, IntegrationAborted, SamplerError, ArithmeticError)


def run(cfg: RunConfig, stdout=None, stderr=None) -> int:
    """Execute a parsed configuration; returns the exit status."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        status, text = HANDLERS[cfg.command](cfg)
    except DomainError as exc:
        stderr.write(f"partint: runtime error: {exc}\n")
        return EXIT_RUNTIME
    except _INVALID as exc:
        stderr.write(f"partint: error: {exc}\n")
        return EXIT_INVALID
    except _RUNTIME as exc:
        stderr.write(f"partint: runtime error: {exc}\n")
        return EXIT_RUNTIME
    _emit(cfg, text, stdout)
    return status


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        cfg = parse_config(argv)
    except ConfigError as exc:
        sys.stderr.write(f"partint: error: {exc}\n")
        return EXIT_INVALID
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())

"""Run configuration documents.

A run is described by one INI document with the sections below.  Every key
is optional unless noted; unknown sections or keys are rejected.  Selecting
``[scenario] preset`` fills the model, income, subsistence and utility
sections from the named calibration, and explicit keys then override it.

::

    [utility]      kind, lambda
    [model]        beta (required without a preset), return_rate, initial_assets
    [income]       kind, mean, std, half_width, sequence, k
    [subsistence]  kind (none | constant | bounded_uniform | lognormal), mean, half_width, std
    [scenario]     kind (obligatory | impulsive | true_agency | custom), preset,
                   c_fixed, policy (solve | none), policy_file
    [grid]         a_min, a_max, n_points, n_consumption_points, tolerance,
                   max_iterations, n_income_nodes, c_floor
    [simulation]   n_agents, horizon, master_seed
    [output]       format (csv), path

Grid keys left out are resolved to the desk-scale defaults at parse time,
so :func:`dump_config` always writes a complete document and
``parse_config(dump_config(cfg)) == cfg``.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass
from typing import Optional

from .core import (
    INCOME_KINDS,
    SUBSISTENCE_KINDS,
    UTILITY_KINDS,
    IncomeProcess,
    ModelParams,
    SubsistenceProcess,
    UtilityFunction,
)
from .errors import ConfigurationError, RuinlabError
from .presets import HORIZON, N_AGENTS, get_preset
from .solver import GridSpec, default_grid

SCENARIO_KINDS = ("obligatory", "impulsive", "true_agency", "custom")

_FLOAT, _INT, _STR, _SEQ = "float", "int", "str", "seq"

SCHEMA = {
    "utility": {"kind": _STR, "lambda": _FLOAT},
    "model": {"beta": _FLOAT, "return_rate": _FLOAT, "initial_assets": _FLOAT},
    "income": {"kind": _STR, "mean": _FLOAT, "std": _FLOAT, "half_width": _FLOAT, "sequence": _SEQ, "k": _INT},
    "subsistence": {"kind": _STR, "mean": _FLOAT, "half_width": _FLOAT, "std": _FLOAT},
    "scenario": {"kind": _STR, "preset": _STR, "c_fixed": _FLOAT, "policy": _STR, "policy_file": _STR},
    "grid": {
        "a_min": _FLOAT, "a_max": _FLOAT, "n_points": _INT, "n_consumption_points": _INT,
        "tolerance": _FLOAT, "max_iterations": _INT, "n_income_nodes": _INT, "c_floor": _FLOAT,
    },
    "simulation": {"n_agents": _INT, "horizon": _INT, "master_seed": _INT},
    "output": {"format": _STR, "path": _STR},
}


class ConfigError(ConfigurationError):
    """Configuration problem tied to a section, key and (when known) line."""

    def __init__(self, message: str, section: Optional[str] = None, key: Optional[str] = None, line: Optional[int] = None):
        where = ""
        if section is not None:
            where = f"[{section}]" + (f" {key}" if key else "")
            if line is not None:
                where += f" (line {line})"
            where += ": "
        super().__init__(where + message)
        self.section = section
        self.key = key
        self.line = line


@dataclass(frozen=True)
class RunConfig:
    utility: UtilityFunction
    model: ModelParams
    income: IncomeProcess
    subsistence: Optional[SubsistenceProcess]
    scenario: str
    grid: GridSpec
    n_agents: int = N_AGENTS
    horizon: int = HORIZON
    master_seed: int = 0
    preset: Optional[str] = None
    c_fixed: Optional[float] = None
    solve_policy: bool = True
    policy_file: Optional[str] = None
    output_format: str = "csv"
    output_path: str = "ruinlab_out"

    @property
    def uses_policy(self) -> bool:
        if self.scenario == "obligatory":
            return False
        if self.scenario == "impulsive":
            return self.solve_policy
        return True


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^\s*([^=:#;\s][^=:]*?)\s*[=:]")


def _line_index(text: str) -> dict:
    """``(section, key) -> line number`` for error messages."""
    lines = {}
    section = None
    for no, raw in enumerate(text.splitlines(), start=1):
        if raw.lstrip().startswith(("#", ";")):
            continue
        m = _SECTION_RE.match(raw)
        if m:
            section = m.group(1).strip().lower()
            lines.setdefault((section, None), no)
            continue
        m = _KEY_RE.match(raw)
        if m and section is not None:
            lines.setdefault((section, m.group(1).strip().lower()), no)
    return lines


def _convert(kind: str, raw: str, section: str, key: str, line):
    text = raw.strip()
    try:
        if kind == _FLOAT:
            return float(text)
        if kind == _INT:
            try:
                return int(text)
            except ValueError:
                pass
            # accept integral spellings like 5e4 or 100.0
            value = float(text)
            if value != int(value):
                raise ValueError
            return int(value)
        if kind == _SEQ:
            return tuple(float(v) for v in text.replace(",", " ").split())
    except ValueError:
        wanted = {_FLOAT: "a number", _INT: "an integer", _SEQ: "a list of numbers"}[kind]
        raise ConfigError(f"expected {wanted}, got {text!r}", section, key, line) from None
    return text


def _read(text: str, overrides) -> tuple[dict, dict]:
    parser = configparser.ConfigParser(interpolation=None, default_section="\0defaults")
    parser.optionxform = str.lower
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed document: {exc}") from None
    lines = _line_index(text)
    raw: dict = {}
    for section in parser.sections():
        name = section.strip().lower()
        if name not in SCHEMA:
            raise ConfigError(f"unknown section; expected one of {sorted(SCHEMA)}", name, None, lines.get((name, None)))
        for key, value in parser.items(section):
            if key not in SCHEMA[name]:
                raise ConfigError(
                    f"unknown key {key!r}; valid keys are {sorted(SCHEMA[name])}", name, key, lines.get((name, key))
                )
            raw.setdefault(name, {})[key] = value
    for item in overrides or ():
        target, sep, value = item.partition("=")
        section, dot, key = target.strip().lower().partition(".")
        if not sep or not dot:
            raise ConfigError(f"override {item!r} must look like section.key=value")
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise ConfigError(f"unknown override key {target.strip()!r}", section, key)
        raw.setdefault(section, {})[key] = value
        lines[(section, key)] = None
    typed = {
        section: {k: _convert(SCHEMA[section][k], v, section, k, lines.get((section, k))) for k, v in keys.items()}
        for section, keys in raw.items()
    }
    return typed, lines


def _build(typed: dict, lines: dict) -> RunConfig:
    sec = lambda name: typed.get(name, {})  # noqa: E731

    def fail(msg, section, key):
        return ConfigError(msg, section, key, lines.get((section, key)))

    def guard(section, key, fn):
        try:
            return fn()
        except ConfigError:
            raise
        except RuinlabError as exc:
            raise fail(str(exc), section, key) from None

    scen = sec("scenario")
    preset = scen.get("preset")
    base = guard("scenario", "preset", lambda: get_preset(preset)) if preset else None

    # utility
    ut = sec("utility")
    ukind = ut.get("kind", "sqrt")
    if ukind not in UTILITY_KINDS:
        raise fail(f"must be one of {list(UTILITY_KINDS)}, got {ukind!r}", "utility", "kind")
    utility = guard("utility", "lambda", lambda: UtilityFunction(ukind, ut.get("lambda")))

    # model
    md = sec("model")
    if "beta" in md:
        beta = md["beta"]
    elif base is not None:
        beta = base.beta
    else:
        raise fail("missing required key (or select a preset)", "model", "beta")
    if not (0.0 < beta < 1.0):
        raise fail(f"beta must lie in the open interval (0, 1), got {beta}", "model", "beta")
    a0 = md.get("initial_assets", base.initial_assets if base else 0.0)
    model = guard("model", None, lambda: ModelParams(beta, md.get("return_rate", 1.0), a0))

    # income
    inc = sec("income")
    if base is not None:
        defaults = {"kind": "lognormal", "mean": base.income_mean, "std": base.income_std}
    else:
        defaults = {"kind": "constant"}
        if "mean" not in inc and inc.get("kind") != "fixed_sequence":
            raise fail("missing required key (or select a preset)", "income", "mean")
    merged = {**defaults, **inc} if inc.get("kind", defaults["kind"]) == defaults["kind"] else dict(inc)
    if merged.get("kind", "constant") not in INCOME_KINDS:
        raise fail(f"must be one of {list(INCOME_KINDS)}, got {merged['kind']!r}", "income", "kind")
    income = guard("income", None, lambda: IncomeProcess(
        merged.get("kind", "constant"), mean=merged.get("mean", 0.0), std=merged.get("std", 0.0),
        half_width=merged.get("half_width", 0.0), sequence=merged.get("sequence", ()), k=merged.get("k", 0),
    ))

    # subsistence
    sb = sec("subsistence")
    subsistence = base.subsistence if base is not None else None
    if sb:
        kind = sb.get("kind", subsistence.kind if subsistence else "constant")
        if kind == "none":
            extra = set(sb) - {"kind"}
            if extra:
                raise fail("takes no other keys when kind = none", "subsistence", sorted(extra)[0])
            subsistence = None
        else:
            if kind not in SUBSISTENCE_KINDS:
                raise fail(f"must be one of {['none', *SUBSISTENCE_KINDS]}, got {kind!r}", "subsistence", "kind")
            keep = subsistence if (subsistence is not None and subsistence.kind == kind) else None
            fields = {
                "mean": keep.mean if keep else None,
                "half_width": keep.half_width if keep else 0.0,
                "std": keep.std if keep else 0.0,
            }
            fields.update({k: v for k, v in sb.items() if k != "kind"})
            if fields["mean"] is None:
                raise fail("missing required key", "subsistence", "mean")
            subsistence = guard("subsistence", None, lambda: SubsistenceProcess(kind, **fields))

    # scenario
    skind = scen.get("kind", "impulsive" if base is not None else "true_agency")
    if skind not in SCENARIO_KINDS:
        raise fail(f"must be one of {list(SCENARIO_KINDS)}, got {skind!r}", "scenario", "kind")
    c_fixed = scen.get("c_fixed")
    if skind == "obligatory":
        if c_fixed is None:
            raise fail("obligatory scenario needs c_fixed", "scenario", "c_fixed")
        if not (c_fixed >= 0):
            raise fail(f"must be >= 0, got {c_fixed}", "scenario", "c_fixed")
        if subsistence is not None and subsistence.kind == "constant" and c_fixed < subsistence.mean:
            raise fail(f"must be >= the subsistence floor {subsistence.mean}", "scenario", "c_fixed")
    elif c_fixed is not None:
        raise fail(f"only applies to the obligatory scenario, not {skind!r}", "scenario", "c_fixed")
    policy_mode = scen.get("policy", "solve")
    if policy_mode not in ("solve", "none"):
        raise fail(f"must be 'solve' or 'none', got {policy_mode!r}", "scenario", "policy")
    if policy_mode == "none" and skind != "impulsive":
        raise fail("only the impulsive scenario can run without a policy", "scenario", "policy")
    if skind == "impulsive" and subsistence is None:
        raise fail("impulsive scenario needs a [subsistence] process", "scenario", "kind")
    policy_file = scen.get("policy_file")
    if skind == "custom" and not policy_file:
        raise fail("custom scenario needs policy_file", "scenario", "policy_file")
    if policy_file and skind != "custom":
        raise fail("only applies to the custom scenario", "scenario", "policy_file")

    # grid: resolve defaults now so the dump is complete
    gd = sec("grid")
    grid = guard("grid", None, lambda: _resolve_grid(model, income, utility, gd))

    sim = sec("simulation")
    n_agents = sim.get("n_agents", N_AGENTS)
    horizon = sim.get("horizon", HORIZON)
    seed = sim.get("master_seed", 0)
    for key, value, lo in (("n_agents", n_agents, 1), ("horizon", horizon, 1), ("master_seed", seed, 0)):
        if value < lo:
            raise fail(f"must be >= {lo}, got {value}", "simulation", key)
    if seed >= 2**64:
        raise fail("must fit in 64 unsigned bits", "simulation", "master_seed")

    out = sec("output")
    fmt = out.get("format", "csv")
    if fmt != "csv":
        raise fail(f"only 'csv' is supported, got {fmt!r}", "output", "format")

    return RunConfig(
        utility=utility, model=model, income=income, subsistence=subsistence, scenario=skind, grid=grid,
        n_agents=n_agents, horizon=horizon, master_seed=seed, preset=preset, c_fixed=c_fixed,
        solve_policy=policy_mode == "solve", policy_file=policy_file,
        output_format=fmt, output_path=out.get("path", "ruinlab_out"),
    )


def _resolve_grid(model, income, utility, given: dict) -> GridSpec:
    if income.kind == "lookahead_instance":
        base = GridSpec()
    else:
        base = default_grid(model, income, utility)
    fields = {name: getattr(base, name) for name in SCHEMA["grid"]}
    fields.update(given)
    if fields["c_floor"] is None:
        fields["c_floor"] = 1e-6 * fields["a_max"]
    return GridSpec(**fields)


def parse_config(text: str, overrides=None) -> RunConfig:
    """Validate a configuration document; ``overrides`` holds ``section.key=value`` strings."""
    typed, lines = _read(text, overrides)
    return _build(typed, lines)


def load_config(path: str, overrides=None) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc.strerror}") from None
    return parse_config(text, overrides)


# ---------------------------------------------------------------------------
# normalized dump
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(repr(float(v)) for v in value)
    return str(value)


def config_sections(cfg: RunConfig) -> dict:
    """Fully resolved configuration as nested plain values."""
    u = {"kind": cfg.utility.kind}
    if cfg.utility.lam is not None:
        u["lambda"] = float(cfg.utility.lam)
    inc = {"kind": cfg.income.kind}
    if cfg.income.kind == "fixed_sequence":
        inc["sequence"] = cfg.income.sequence
    else:
        inc["mean"] = float(cfg.income.mean)
        inc["std"] = float(cfg.income.std)
        inc["half_width"] = float(cfg.income.half_width)
        if cfg.income.kind == "lookahead_instance":
            inc["k"] = int(cfg.income.k)
    if cfg.subsistence is None:
        sub = {"kind": "none"}
    else:
        s = cfg.subsistence
        sub = {"kind": s.kind, "mean": float(s.mean), "half_width": float(s.half_width), "std": float(s.std)}
    scen = {"kind": cfg.scenario}
    if cfg.preset:
        scen["preset"] = cfg.preset
    if cfg.c_fixed is not None:
        scen["c_fixed"] = float(cfg.c_fixed)
    scen["policy"] = "solve" if cfg.solve_policy else "none"
    if cfg.policy_file:
        scen["policy_file"] = cfg.policy_file
    g = cfg.grid
    grid = {name: getattr(g, name) for name in SCHEMA["grid"]}
    grid = {k: (float(v) if SCHEMA["grid"][k] == _FLOAT else int(v)) for k, v in grid.items()}
    return {
        "utility": u,
        "model": {
            "beta": float(cfg.model.beta),
            "return_rate": float(cfg.model.return_rate),
            "initial_assets": float(cfg.model.initial_assets),
        },
        "income": inc,
        "subsistence": sub,
        "scenario": scen,
        "grid": grid,
        "simulation": {"n_agents": cfg.n_agents, "horizon": cfg.horizon, "master_seed": cfg.master_seed},
        "output": {"format": cfg.output_format, "path": cfg.output_path},
    }


def dump_config(cfg: RunConfig) -> str:
    parts = []
    for section, keys in config_sections(cfg).items():
        parts.append(f"[{section}]")
        parts.extend(f"{k} = {_fmt(v)}" for k, v in keys.items())
        parts.append("")
    return "\n".join(parts)

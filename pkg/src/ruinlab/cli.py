"""Command-line entry point: ``ruinlab {solve,simulate,bounds,lookahead,verify}``.

Exit status: 0 success, 2 validation error, 3 non-convergence, 4 verifier
failure.  Every output file is written to a temporary sibling and renamed
into place.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from typing import Optional

import numpy as np

from .cohort import CohortConfig, Scenario, run_cohort, summarize
from .config import ConfigError, RunConfig, config_sections, load_config
from .core import RngStream, UtilityFunction
from .errors import ConfigurationError, NonConvergenceError, RuinlabError
from .lookahead import estimate_gap, lemma1_grid
from .scenarios import HoeffdingReport, jensen_cap, obligatory_probe
from .solver import Policy, solve_policy
from .verify import VERIFIERS, run_verifier

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NONCONVERGED = 3
EXIT_VERIFY_FAILED = 4


# ---------------------------------------------------------------------------
# emission
# ---------------------------------------------------------------------------

def format_float(x: float) -> str:
    """17 significant digits, which round-trips every double; always reads back as a float."""
    text = f"{x:.17g}"
    if text.lstrip("-").isdigit():
        text += ".0"
    return text


def _json_scalar(value) -> str:
    if value is None or isinstance(value, (bool, np.bool_)):
        return "null" if value is None else ("true" if value else "false")
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return format_float(value) if math.isfinite(value) else "null"
    return json.dumps(str(value))


def to_json(obj, indent: int = 2, _level: int = 0) -> str:
    """Deterministic JSON with fixed float formatting and insertion-ordered keys."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {to_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        items = [pad + to_json(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    return _json_scalar(obj)


def atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def policy_csv(policy: Policy) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["asset", "value", "consumption"])
    for a, v, c in zip(policy.grid, policy.values, policy.consumption):
        w.writerow([format_float(a), format_float(v), format_float(c)])
    return buf.getvalue()


def histogram_csv(hist) -> str:
    lines = ["ruin_time,count"]
    lines += [f"{t},{hist.counts[t]}" for t in sorted(hist.counts)]
    lines.append(f"survived,{hist.survivors}")
    return "\n".join(lines) + "\n"


def read_policy(csv_path: str) -> Policy:
    """Load a policy written by ``solve`` (the JSON sidecar supplies ``c_floor``)."""
    try:
        data = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
        with open(_sidecar(csv_path), encoding="utf-8") as fh:
            meta = json.load(fh)
    except (OSError, ValueError) as exc:
        raise ConfigurationError(f"cannot load policy from {csv_path!r}: {exc}") from None
    if data.shape[0] < 2 or data.shape[1] != 3:
        raise ConfigurationError(f"{csv_path!r} is not an asset,value,consumption table")
    return Policy(
        grid=data[:, 0].copy(), values=data[:, 1].copy(), consumption=data[:, 2].copy(),
        c_floor=float(meta["c_floor"]), floor=meta.get("floor"),
        iterations=int(meta.get("iterations", 0)), residual=float(meta.get("residual", 0.0)),
    )


def _sidecar(csv_path: str) -> str:
    root, _ = os.path.splitext(csv_path)
    return root + ".json"


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _solve(cfg: RunConfig) -> Policy:
    return solve_policy(cfg.model, cfg.income, cfg.utility, floor=cfg.subsistence, spec=cfg.grid)


def _diagnostics(cfg: RunConfig, policy: Optional[Policy], error: Optional[NonConvergenceError] = None) -> dict:
    if error is not None:
        return {"converged": False, "iterations": error.iterations, "residual": error.residual,
                "tolerance": cfg.grid.tolerance}
    return {
        "converged": True,
        "iterations": policy.iterations,
        "residual": policy.residual,
        "tolerance": cfg.grid.tolerance,
        "c_floor": policy.c_floor,
        "floor": policy.floor,
        "infeasible_points": policy.infeasible,
    }


def cmd_solve(cfg: RunConfig, out_dir: str) -> int:
    csv_path = os.path.join(out_dir, "policy.csv")
    try:
        policy = _solve(cfg)
    except NonConvergenceError as exc:
        atomic_write(_sidecar(csv_path), to_json(_diagnostics(cfg, None, exc)) + "\n")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    atomic_write(csv_path, policy_csv(policy))
    atomic_write(_sidecar(csv_path), to_json(_diagnostics(cfg, policy)) + "\n")
    print(f"wrote {csv_path} ({policy.iterations} iterations, residual {format_float(policy.residual)})")
    return EXIT_OK


def build_cohort(cfg: RunConfig) -> CohortConfig:
    if cfg.scenario == "obligatory":
        scenario = Scenario.obligatory(cfg.c_fixed)
    elif cfg.scenario == "custom":
        scenario = Scenario.custom(read_policy(cfg.policy_file))
    else:
        policy = _solve(cfg) if cfg.uses_policy else None
        if cfg.scenario == "impulsive":
            scenario = Scenario.impulsive(policy, cfg.subsistence)
        else:
            scenario = Scenario.true_agency(policy, cfg.subsistence)
    return CohortConfig(scenario, cfg.model, cfg.income, cfg.n_agents, cfg.horizon, cfg.master_seed)


def simulation_summary(cfg: RunConfig, hist) -> dict:
    s = summarize(hist)
    return {
        "n_agents": cfg.n_agents,
        "horizon": cfg.horizon,
        "master_seed": cfg.master_seed,
        "ruin_fraction": s["ruin_fraction"],
        "survivor_fraction": s["survivor_fraction"],
        "median_ruin_time": s["median_ruin_time"],
        "mode_ruin_time": s["mode_ruin_time"],
        "fraction_ruined_first_10": s["fraction_ruined_first_10"],
        "config_echo": config_sections(cfg),
    }


def cmd_simulate(cfg: RunConfig, out_dir: str, workers: Optional[int] = None) -> int:
    try:
        cohort = build_cohort(cfg)
    except NonConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    hist = run_cohort(cohort, workers=workers)
    hist_path = os.path.join(out_dir, "histogram.csv")
    summary_path = os.path.join(out_dir, "summary.json")
    atomic_write(hist_path, histogram_csv(hist))
    atomic_write(summary_path, to_json(simulation_summary(cfg, hist)) + "\n")
    print(f"wrote {hist_path} and {summary_path}")
    return EXIT_OK


def bounds_report(args) -> dict:
    report: dict = {}
    lam = args.lam
    if args.Y is not None and args.beta is not None:
        u = UtilityFunction(args.utility, lam)
        entry = {"cap": jensen_cap(u, args.Y, args.beta)}
        if args.a0 is not None:
            v = obligatory_probe(args.a0, u, args.Y, args.beta)
            entry.update(threshold=v.threshold, a0=v.a0, verdict=v.verdict, immediate_utility=v.immediate_utility)
        report["jensen"] = entry
    if args.B is not None:
        if args.a0 is None or args.Y is None:
            raise ConfigurationError("the ruin bound needs --a0 and --Y as well as --B")
        h = HoeffdingReport(args.a0, args.Y, args.B, args.delta, args.eps)
        rows = []
        for T in args.T or []:
            row = {"T": T}
            if T > h.t_min:
                row["bound"] = h.bound_at(T)
            else:
                row["bound"] = None
                row["note"] = f"T must exceed 2*a0/(B-Y) = {format_float(h.t_min)}"
            rows.append(row)
        report["hoeffding"] = {"drift": h.drift, "rate": h.rate, "t_min": h.t_min, "table": rows}
    if not report:
        raise ConfigurationError("nothing to compute: give --Y and --beta, and/or --a0 --Y --B")
    return report


def cmd_bounds(args) -> int:
    print(to_json(bounds_report(args)))
    return EXIT_OK


def lookahead_report(ks, samples: int, seed: int, lemma1: bool) -> dict:
    for k in ks:
        if k < 2 or k % 2:
            raise ConfigurationError(f"k must be an even integer >= 2, got {k}")
    gaps = []
    for k in ks:
        est = estimate_gap(k, samples, RngStream(seed, k), include_brute_force=False)
        gaps.append({"k": k, "mean_gap": est.mean, "stderr": est.stderr, "n_samples": est.n_samples})
    ratios = [
        {"k_from": a["k"], "k_to": b["k"], "ratio": b["mean_gap"] / a["mean_gap"] if a["mean_gap"] else None}
        for a, b in zip(gaps, gaps[1:])
    ]
    report = {"seed": seed, "gaps": gaps, "ratios": ratios}
    if lemma1:
        m = float(lemma1_grid().min())
        report["lemma1"] = {"min_margin": m, "passed": m >= -1e-12}
    return report


def cmd_lookahead(args) -> int:
    report = lookahead_report(args.k or [], args.samples, args.seed, args.lemma1_grid)
    print(to_json(report))
    if args.lemma1_grid and not report["lemma1"]["passed"]:
        return EXIT_VERIFY_FAILED
    return EXIT_OK


def cmd_verify(args) -> int:
    report = run_verifier(args.name)
    text = to_json(report)
    if args.out:
        atomic_write(args.out, text + "\n")
    else:
        print(text)
    status = "passed" if report["passed"] else "FAILED"
    print(f"{args.name}: {status} ({report['n_asserted'] - report['n_failed']}/{report['n_asserted']} asserted cells)",
          file=sys.stderr)
    return EXIT_OK if report["passed"] else EXIT_VERIFY_FAILED


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _int_list(text: str):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _float_list(text: str):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ruinlab", description="Consumption, ruin and lookahead experiments.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def config_args(sp):
        sp.add_argument("config", help="INI run configuration")
        sp.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override one configuration key (repeatable)")
        sp.add_argument("--out", help="output directory (default: [output] path)")

    sp = sub.add_parser("solve", help="solve the consumption policy by value iteration")
    config_args(sp)
    sp = sub.add_parser("simulate", help="run a seeded cohort and write its ruin histogram")
    config_args(sp)
    sp.add_argument("--workers", type=int, help="worker threads (default: RUINLAB_THREADS or CPU count)")

    sp = sub.add_parser("bounds", help="fixed-consumption cap and ruin-probability bound")
    sp.add_argument("--a0", type=float)
    sp.add_argument("--Y", type=float)
    sp.add_argument("--beta", type=float)
    sp.add_argument("--utility", default="sqrt")
    sp.add_argument("--lambda", dest="lam", type=float)
    sp.add_argument("--B", type=float)
    sp.add_argument("--delta", type=float, default=0.0)
    sp.add_argument("--eps", type=float, default=0.0)
    sp.add_argument("--T", type=_float_list, help="comma-separated horizons")

    sp = sub.add_parser("lookahead", help="utility gap of k-step lookahead")
    sp.add_argument("--k", type=_int_list, help="comma-separated even k values, e.g. 8,16")
    sp.add_argument("--samples", type=int, default=10_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--lemma1-grid", action="store_true", help="also check the concavity margin grid")

    sp = sub.add_parser("verify", help="run an invariant sweep")
    sp.add_argument("name", choices=sorted(VERIFIERS))
    sp.add_argument("--out", help="write the JSON report here instead of stdout")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command in ("solve", "simulate"):
            cfg = load_config(args.config, args.set)
            out_dir = args.out or cfg.output_path
            if args.command == "solve":
                return cmd_solve(cfg, out_dir)
            return cmd_simulate(cfg, out_dir, args.workers)
        if args.command == "bounds":
            return cmd_bounds(args)
        if args.command == "lookahead":
            if args.samples < 2:
                raise ConfigurationError("--samples must be >= 2")
            return cmd_lookahead(args)
        return cmd_verify(args)
    except NonConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except (RuinlabError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())

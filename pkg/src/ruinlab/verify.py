"""Invariant sweeps behind ``ruinlab verify``.

Each verifier returns a report dict with a ``cells`` list.  A cell carries
``passed`` and, for cells that are recorded but never asserted,
``informational: True``.  ``report["passed"]`` is the conjunction over the
asserted cells only.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .cohort import CohortConfig, Scenario, run_cohort
from .core import IncomeProcess, ModelParams, SubsistenceProcess, UtilityFunction, discounted_utility
from .errors import ConfigurationError
from .lookahead import lemma1_grid
from .scenarios import (
    CONSUME_ALL,
    foc_residual,
    hoeffding_bound,
    hoeffding_slack,
    improve_case1,
    improve_case2,
    isoelastic_split_epsilon,
    jensen_cap,
    obligatory_probe,
    split_gain,
)

NEG_TOL = -1e-12
FOC_TOL = 1e-9


def _finish(name: str, cells: list) -> dict:
    asserted = [c for c in cells if not c.get("informational")]
    return {
        "verifier": name,
        "passed": all(c["passed"] for c in asserted),
        "n_cells": len(cells),
        "n_asserted": len(asserted),
        "n_failed": sum(not c["passed"] for c in asserted),
        "cells": cells,
    }


def verify_thm1() -> dict:
    """Verdict rule and Jensen-cap dominance for constant consumption at ``Y``."""
    cells = []
    utilities = [
        UtilityFunction("sqrt"),
        UtilityFunction("isoelastic_unshifted", 0.5),
        UtilityFunction("isoelastic_unshifted", 0.3),
    ]
    for u in utilities:
        for Y in (0.5, 1.0, 4.0):
            for beta in (0.5, 0.8, 0.95):
                cap = jensen_cap(u, Y, beta)
                partial = max(discounted_utility([Y] * n, beta, u) for n in (1, 10, 100, 1000))
                cells.append({
                    "check": "jensen_dominance", "utility": u.kind, "lambda": u.lam,
                    "Y": Y, "beta": beta, "cap": cap, "max_partial_sum": partial,
                    "passed": bool(partial <= cap * (1 + 1e-12)),
                })
                for scale in (0.5, 1.0, 2.0):
                    v = obligatory_probe(1.0, u, Y, beta)
                    a0 = scale * v.threshold
                    probe = obligatory_probe(a0, u, Y, beta)
                    # a0 above the threshold means eating it all at once beats the cap
                    expected = CONSUME_ALL if a0 > probe.threshold else "cap_binding"
                    consistent = probe.verdict == expected
                    if probe.verdict == CONSUME_ALL:
                        consistent &= float(u(a0)) > probe.cap
                    cells.append({
                        "check": "verdict", "utility": u.kind, "lambda": u.lam, "Y": Y,
                        "beta": beta, "a0": a0, "threshold": probe.threshold,
                        "verdict": probe.verdict, "passed": bool(consistent),
                    })
    return _finish("thm1", cells)


def verify_thm2(n_agents: int = 20_000, master_seed: int = 0, horizons=(24, 32, 40)) -> dict:
    """Cohort survival at each ``T`` against the ruin bound plus sampling slack."""
    a0, Y, B, delta, eps = 2.0, 1.0, 1.2, 0.1, 0.1
    config = CohortConfig(
        scenario=Scenario.impulsive(None, SubsistenceProcess("bounded_uniform", mean=B, half_width=delta)),
        model=ModelParams(beta=0.95, return_rate=1.0, initial_assets=a0),
        income=IncomeProcess("bounded_uniform", mean=Y, half_width=eps),
        n_agents=n_agents,
        horizon=max(horizons),
        master_seed=master_seed,
    )
    hist = run_cohort(config)
    cells = []
    for T in horizons:
        bound = hoeffding_bound(a0, Y, B, delta, eps, T)
        limit = bound + hoeffding_slack(bound, n_agents)
        survived = hist.survival_fraction(T)
        cells.append({
            "T": T, "bound": bound, "limit": limit, "survival_fraction": survived,
            "passed": bool(survived <= limit),
        })
    return _finish("thm2", cells)


def _thm4_utilities():
    return [UtilityFunction("sqrt")] + [UtilityFunction("isoelastic_unshifted", lam) for lam in (0.1, 0.3, 0.5, 0.7, 0.9)]


def verify_thm4() -> dict:
    """Both plan extensions are non-negative over the declared sweep."""
    cells = []
    betas = np.round(np.linspace(0.51, 0.99, 9), 6)
    for u in _thm4_utilities():
        for b in (0.1, 1.0, 10.0):
            for beta in betas:
                for c_T in np.linspace(2 * b, 10 * b, 9):
                    g = improve_case1(float(c_T), b, float(beta), u)
                    cells.append({"case": 1, "utility": u.kind, "lambda": u.lam, "b": b,
                                  "beta": float(beta), "c_T": float(c_T), "gain": g, "passed": bool(g >= NEG_TOL)})
                for c_T in np.linspace(b, 2 * b, 9, endpoint=False):
                    g = improve_case2(float(c_T), b, float(beta), u)
                    cells.append({"case": 2, "utility": u.kind, "lambda": u.lam, "b": b,
                                  "beta": float(beta), "c_T": float(c_T), "gain": g, "passed": bool(g >= NEG_TOL)})
    return _finish("thm4", cells)


def verify_thm5() -> dict:
    """First-order residual everywhere; split gain asserted for unshifted ``lambda < 1`` only."""
    cells = []
    for c_T in (0.5, 1.0, 5.0):
        for beta in (0.51, 0.7, 0.9):
            for lam in (0.3, 0.5, 0.7, 2.0, 3.0):
                eps = isoelastic_split_epsilon(c_T, beta, lam)
                res = foc_residual(c_T, beta, lam, eps)
                cells.append({"check": "foc", "c_T": c_T, "beta": beta, "lambda": lam,
                              "epsilon": eps, "residual": res, "passed": bool(res <= FOC_TOL)})
                for kind in ("isoelastic_unshifted", "isoelastic_shifted"):
                    u = UtilityFunction(kind, lam)
                    g = split_gain(c_T, beta, u, eps)
                    asserted = kind == "isoelastic_unshifted" and lam < 1
                    cell = {"check": "split_gain", "utility": kind, "c_T": c_T, "beta": beta,
                            "lambda": lam, "epsilon": eps, "gain": g, "passed": bool(g >= 0)}
                    if not asserted:
                        cell["informational"] = True
                    cells.append(cell)
    return _finish("thm5", cells)


def verify_lemma1() -> dict:
    grid = lemma1_grid()
    ws = [i / 100 for i in range(1, 100)]
    as_ = [i / 100 for i in range(51, 100)]
    cells = []
    for i, w in enumerate(ws):
        for j, a in enumerate(as_):
            m = float(grid[i, j])
            cells.append({"w": w, "a": a, "margin": m, "passed": bool(m >= NEG_TOL)})
    report = _finish("lemma1", cells)
    report["min_margin"] = float(grid.min())
    return report


VERIFIERS: dict[str, Callable[[], dict]] = {
    "thm1": verify_thm1,
    "thm2": verify_thm2,
    "thm4": verify_thm4,
    "thm5": verify_thm5,
    "lemma1": verify_lemma1,
}


def run_verifier(name: str) -> dict:
    try:
        fn = VERIFIERS[name]
    except KeyError:
        raise ConfigurationError(f"unknown verifier {name!r}; expected one of {sorted(VERIFIERS)}") from None
    return fn()

"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import timeit

import numpy as np

from ruinlab import _kernels_py
from ruinlab.core import ModelParams, UtilityFunction
from ruinlab.solver import BellmanOperator, GridSpec

try:
    from ruinlab import _kernels as _compiled
except ImportError:
    _compiled = None


def bellman_case(n_points: int, n_cons: int):
    op = BellmanOperator(GridSpec(0.0, 40.0, n_points, n_cons, 1e-6), ModelParams(0.95, 1.0, 0.0),
                         UtilityFunction("sqrt"), workers=1)
    values = np.sqrt(op.grid)
    ynodes = np.linspace(0.6, 1.4, 7)
    out = np.empty(n_points)
    arg = np.empty(n_points, dtype=np.int64)

    def run(mod):
        mod.bellman_rows(values, op.cons, op.util, op.feasible, op.ruin_value, op.grid, ynodes,
                         1.0, 0.95, 0.0, op.spec.step, 0, n_points, out, arg)
    return run


def simulate_case(n_agents: int, horizon: int):
    gen = np.random.default_rng(0)
    income = gen.uniform(0.5, 1.5, (n_agents, horizon))
    floor = gen.uniform(0.8, 1.4, (n_agents, horizon))
    pcons = np.linspace(0.01, 10.0, 2001)
    out = np.empty(n_agents, dtype=np.int64)

    def run(mod):
        mod.simulate_rows(income, floor, 3, 2.0, pcons, 0.0, 0.02, 1e-5, 40.0, 1.0, out)
    return run


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    cases = {
        "bellman_rows 501x129": bellman_case(501, 129),
        "bellman_rows 2001x513": bellman_case(2001, 513),
        "simulate_rows 5000x100": simulate_case(5000, 100),
    }
    backends = [("python", _kernels_py)] + ([("compiled", _compiled)] if _compiled else [])
    print(f"{'case':<26}" + "".join(f"{name:>12}" for name, _ in backends) + ("     speedup" if _compiled else ""))
    for label, run in cases.items():
        times = [min(timeit.repeat(lambda: run(mod), number=1, repeat=args.repeat)) for _, mod in backends]
        row = f"{label:<26}" + "".join(f"{t:>11.4f}s" for t in times)
        if len(times) == 2:
            row += f"{times[0] / times[1]:>11.1f}x"
        print(row)


if __name__ == "__main__":
    main()

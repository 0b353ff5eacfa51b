"""Value iteration for the infinite-horizon consumption problem.

The Bellman operator maps a value table ``V`` on an equally spaced asset
grid to

    TV(a) = max_c  u(c) + beta * E_y[ V(R * (a - c) + y) ]

where ``c`` ranges over ``n_consumption_points`` equally spaced points of
``[c_lo, a]``, ``V`` is linearly interpolated (flat beyond the grid), the
expectation uses equally weighted income quantile nodes, and next-period
assets ``<= 0`` are ruin with zero continuation value.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .core import IncomeProcess, ModelParams, SubsistenceProcess, UtilityFunction
from .errors import ConfigurationError, DivergenceError, NonConvergenceError

_ROW_CHUNK = 128


@dataclass(frozen=True)
class GridSpec:
    a_min: float = 0.0
    a_max: float = 10.0
    n_points: int = 2001
    n_consumption_points: int = 513
    tolerance: float = 1e-6
    max_iterations: int = 10_000
    n_income_nodes: int = 7
    c_floor: Optional[float] = None

    def __post_init__(self):
        if not (self.a_min >= 0):
            raise ConfigurationError(f"a_min must be >= 0, got {self.a_min}")
        if not (self.a_max > self.a_min):
            raise ConfigurationError(f"a_max ({self.a_max}) must exceed a_min ({self.a_min})")
        if self.n_points < 2 or self.n_consumption_points < 2:
            raise ConfigurationError("grids need at least 2 points")
        if not (self.tolerance > 0):
            raise ConfigurationError(f"tolerance must be > 0, got {self.tolerance}")
        if self.max_iterations < 1 or self.n_income_nodes < 1:
            raise ConfigurationError("max_iterations and n_income_nodes must be >= 1")
        if self.c_floor is not None and not (self.c_floor > 0):
            raise ConfigurationError(f"c_floor must be > 0, got {self.c_floor}")

    @property
    def step(self) -> float:
        return (self.a_max - self.a_min) / (self.n_points - 1)

    @property
    def consumption_floor(self) -> float:
        return 1e-6 * self.a_max if self.c_floor is None else self.c_floor


def default_grid(params: ModelParams, income: IncomeProcess, u: UtilityFunction, **overrides) -> GridSpec:
    """Desk-scale defaults: ``a_max = 4 * max(a0, 20 Y)``, tolerance ``1e-6 * |u(Y + 1)|``."""
    y = income.expected
    a_max = 4.0 * max(params.initial_assets, 20.0 * y)
    if a_max <= 0:
        a_max = 10.0
    scale = abs(float(u(y + 1.0))) or 1.0
    settings = dict(a_min=0.0, a_max=a_max, tolerance=1e-6 * scale)
    settings.update(overrides)
    return GridSpec(**settings)


def build_grid(spec: GridSpec) -> np.ndarray:
    return np.linspace(spec.a_min, spec.a_max, spec.n_points)


class BellmanOperator:
    """Bellman operator with the iteration-invariant tables precomputed.

    ``floor`` is the per-period consumption lower bound (the mean of the
    subsistence process); grid points below it are infeasible and take the
    ruin value ``u(a)`` of consuming everything.
    """

    def __init__(
        self,
        spec: GridSpec,
        params: ModelParams,
        u: UtilityFunction,
        floor: Optional[float] = None,
        workers: Optional[int] = None,
    ):
        self.spec = spec
        self.params = params
        self.u = u
        self.grid = build_grid(spec)
        self.c_floor = spec.consumption_floor
        c_lo = self.c_floor if floor is None else max(float(floor), self.c_floor)
        self.c_lo = c_lo
        self.feasible = (self.grid >= c_lo).astype(np.uint8)

        fracs = np.linspace(0.0, 1.0, spec.n_consumption_points)
        span = np.maximum(self.grid - c_lo, 0.0)
        cons = c_lo + fracs[None, :] * span[:, None]
        cons[:, -1] = np.maximum(self.grid, c_lo)
        self.cons = np.ascontiguousarray(cons)
        ok = self.feasible.astype(bool)
        util = np.zeros_like(cons)
        util[ok] = u(cons[ok])
        self.util = np.ascontiguousarray(util)

        ruin_value = np.zeros(spec.n_points)
        bad = ~ok
        if bad.any():
            if not u.finite_at_zero and np.any(self.grid[bad] == 0):
                raise DivergenceError(
                    f"{u.kind} utility is -inf at the infeasible grid point a = 0; use a_min > 0"
                )
            ruin_value[bad] = u(self.grid[bad])
        self.ruin_value = ruin_value
        self.workers = kernels.worker_count() if workers is None else max(1, workers)

    def __call__(self, values: np.ndarray, ynodes: np.ndarray):
        """Apply the operator; returns ``(new_values, argmax_index, residual)``."""
        values = np.ascontiguousarray(values, dtype=float)
        if values.shape != self.grid.shape:
            raise ConfigurationError("value table does not match grid length")
        ynodes = np.ascontiguousarray(ynodes, dtype=float)
        n = self.grid.shape[0]
        out = np.empty(n)
        arg = np.empty(n, dtype=np.int64)
        chunk = n if (kernels.BACKEND == "compiled" and self.workers == 1) else _ROW_CHUNK
        bounds = [(s, min(s + chunk, n)) for s in range(0, n, chunk)]

        def run(bound):
            kernels.bellman_rows(
                values, self.cons, self.util, self.feasible, self.ruin_value, self.grid, ynodes,
                float(self.params.return_rate), float(self.params.beta), float(self.spec.a_min),
                float(self.spec.step), bound[0], bound[1], out, arg,
            )

        if self.workers > 1 and len(bounds) > 1:
            # rows write disjoint slots of out/arg
            with ThreadPoolExecutor(self.workers) as pool:
                list(pool.map(run, bounds))
        else:
            for b in bounds:
                run(b)
        residual = float(np.max(np.abs(out - values)))
        return out, arg, residual

    def consumption(self, arg: np.ndarray) -> np.ndarray:
        rows = np.arange(len(arg))
        picked = self.cons[rows, np.maximum(arg, 0)]
        return np.where(arg >= 0, picked, self.grid)


def _floor_level(floor) -> Optional[float]:
    if floor is None:
        return None
    if isinstance(floor, SubsistenceProcess):
        return floor.mean
    return float(floor)


def bellman_update(
    values: np.ndarray,
    spec: GridSpec,
    params: ModelParams,
    income: IncomeProcess,
    u: UtilityFunction,
    floor=None,
):
    """One application of the Bellman operator.

    Returns ``(new_values, residual)`` with residual the sup-norm change.
    """
    op = BellmanOperator(spec, params, u, _floor_level(floor))
    new, _, residual = op(values, income.nodes(spec.n_income_nodes))
    return new, residual


@dataclass(frozen=True, eq=False)
class Policy:
    grid: np.ndarray
    values: np.ndarray
    consumption: np.ndarray
    c_floor: float
    floor: Optional[float] = None
    iterations: int = 0
    residual: float = 0.0
    residuals: tuple = ()
    infeasible: int = 0

    @property
    def a_min(self) -> float:
        return float(self.grid[0])

    @property
    def step(self) -> float:
        return float((self.grid[-1] - self.grid[0]) / (len(self.grid) - 1))

    def consume(self, a):
        """Vectorised :func:`policy_consume`."""
        a = np.asarray(a, dtype=float)
        n = len(self.grid)
        s = (a - self.a_min) / self.step
        idx = np.clip(s, 0, n - 2).astype(np.int64)
        w = s - idx
        tab = self.consumption
        c = tab[idx] + w * (tab[idx + 1] - tab[idx])
        c = np.where(s <= 0.0, tab[0], c)
        c = np.where(s >= n - 1, tab[n - 1], c)
        return np.minimum(np.maximum(c, self.c_floor), a)


def policy_consume(policy: Policy, a: float) -> float:
    """Interpolated consumption at ``a`` clamped into ``(c_floor, a]``."""
    if a < 0:
        raise ConfigurationError(f"assets must be >= 0, got {a}")
    tab = policy.consumption
    n = len(tab)
    s = (a - policy.a_min) / policy.step
    if s <= 0.0:
        c = tab[0]
    elif s >= n - 1:
        c = tab[n - 1]
    else:
        idx = int(s)
        w = s - idx
        c = tab[idx] + w * (tab[idx + 1] - tab[idx])
    return float(min(max(c, policy.c_floor), a))


def solve_policy(
    params: ModelParams,
    income: IncomeProcess,
    u: UtilityFunction,
    floor=None,
    spec: Optional[GridSpec] = None,
    workers: Optional[int] = None,
) -> Policy:
    """Iterate the Bellman operator from the zero table to convergence.

    Raises :class:`NonConvergenceError` carrying the last residual when
    ``max_iterations`` is exhausted.
    """
    spec = default_grid(params, income, u) if spec is None else spec
    op = BellmanOperator(spec, params, u, _floor_level(floor), workers=workers)
    ynodes = income.nodes(spec.n_income_nodes)
    values = np.zeros(spec.n_points)
    history = []
    for it in range(1, spec.max_iterations + 1):
        values, arg, residual = op(values, ynodes)
        history.append(residual)
        if residual <= spec.tolerance:
            return Policy(
                grid=op.grid,
                values=values,
                consumption=op.consumption(arg),
                c_floor=op.c_floor,
                floor=_floor_level(floor),
                iterations=it,
                residual=residual,
                residuals=tuple(history),
                infeasible=int(np.sum(op.feasible == 0)),
            )
    raise NonConvergenceError(
        f"value iteration did not converge in {spec.max_iterations} iterations "
        f"(residual {history[-1]:.3e} > tolerance {spec.tolerance:.3e})",
        residual=history[-1],
        iterations=spec.max_iterations,
    )


def backward_induction(
    params: ModelParams,
    incomes: Sequence[float],
    u: UtilityFunction,
    spec: GridSpec,
    floor=None,
):
    """Finite-horizon value tables for a deterministic income sequence.

    Returns ``[V_0, ..., V_H]`` with ``V_H = 0``; ``V_t`` is the value at
    the start of period ``t`` when income ``incomes[t]`` arrives after
    that period's consumption.
    """
    op = BellmanOperator(spec, params, u, _floor_level(floor))
    tables = [np.zeros(spec.n_points)]
    for y in reversed(list(incomes)):
        new, _, _ = op(tables[0], np.array([float(y)]))
        tables.insert(0, new)
    return tables


def interpolation_error_bound(values: np.ndarray, grid: np.ndarray, lo: float = -math.inf, hi: float = math.inf) -> float:
    """Bound on linear-interpolation error of a tabulated function on ``[lo, hi]``.

    Uses half the largest absolute second difference among stencils
    touching the interval; for smooth functions the exact midpoint error is
    an eighth of it, and the extra factor covers kinks created by the max.
    """
    d2 = np.abs(values[2:] - 2.0 * values[1:-1] + values[:-2])
    h = grid[1] - grid[0]
    centers = grid[1:-1]
    mask = (centers >= lo - 2 * h) & (centers <= hi + 2 * h)
    if not mask.any():
        return 0.0
    return float(np.max(d2[mask]) / 2.0)

"""Utility gap between a k-step-lookahead consumer and consumers without lookahead.

The adversarial instance pays 1 for the first ``k/2`` periods and ``x`` for
the remaining ``k/2``, with ``x ~ U(0, 1)`` revealed only to the lookahead
agent.  Utility is ``sqrt`` with no discounting.  Accounting here is
income-first: period ``t`` consumption is paid from assets that already
include ``y_t``, starting from zero assets.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import RngStream
from .errors import ConfigurationError, DomainError, ResourceError

BASELINE_KINDS = ("consume_income", "expected_constant", "asset_fraction")
PLAN_BUDGET = 10**8


@dataclass(frozen=True)
class LookaheadInstance:
    """Income ``Y`` for ``k/2`` periods, then ``x * Y``."""

    k: int
    x: float
    Y: float = 1.0
    income: tuple = field(init=False)

    def __post_init__(self):
        if not isinstance(self.k, (int, np.integer)) or self.k < 2 or self.k % 2:
            raise ConfigurationError(f"k must be an even integer >= 2, got {self.k}")
        if not (0.0 <= self.x <= 1.0):
            raise DomainError(f"x must lie in [0, 1], got {self.x}")
        if not (self.Y > 0):
            raise DomainError(f"Y must be > 0, got {self.Y}")
        half = self.k // 2
        Y = float(self.Y)
        object.__setattr__(self, "income", (Y,) * half + (float(self.x) * Y,) * half)


def build_lookahead_instance(k: int, x: float, Y: float = 1.0) -> LookaheadInstance:
    return LookaheadInstance(k, x, Y)


@dataclass(frozen=True)
class LookaheadResult:
    utility: float
    consumption: tuple
    feasible: bool


def lookahead_plan(k: int, x: float, Y: float = 1.0) -> LookaheadResult:
    """Constant consumption ``Y (1 + x) / 2`` with a running-asset feasibility check."""
    inst = LookaheadInstance(k, x, Y)
    level = Y * (1.0 + x) / 2.0
    assets = 0.0
    feasible = True
    for y in inst.income:
        assets += y - level
        # the plan spends exactly total income, so allow rounding at the end
        feasible &= assets >= -1e-12 * Y * k
    return LookaheadResult(k * math.sqrt(level), (level,) * k, feasible)


def lookahead_utility(k: int, x: float, Y: float = 1.0) -> float:
    return lookahead_plan(k, x, Y).utility


@dataclass(frozen=True)
class BaselineStrategy:
    """No-lookahead rule.

    ``expected_constant`` consumes ``level * Y`` per period (default 0.75,
    the mean of ``(1 + x) / 2``); ``asset_fraction`` consumes ``phi`` of the
    assets on hand.  Rules are applied literally in every period, so
    whatever is unspent at the end is simply lost.
    """

    kind: str
    level: float = 0.75
    phi: float = 0.3

    def __post_init__(self):
        if self.kind not in BASELINE_KINDS:
            raise ConfigurationError(f"unknown baseline {self.kind!r}; expected one of {BASELINE_KINDS}")
        if self.kind == "asset_fraction" and not (0 < self.phi <= 1):
            raise ConfigurationError(f"phi must lie in (0, 1], got {self.phi}")
        if self.kind == "expected_constant" and not (self.level >= 0):
            raise ConfigurationError(f"level must be >= 0, got {self.level}")

    def label(self) -> str:
        if self.kind == "expected_constant":
            return f"expected_constant({self.level:g})"
        if self.kind == "asset_fraction":
            return f"asset_fraction({self.phi:g})"
        return self.kind


@dataclass(frozen=True)
class BaselineRun:
    utility: float
    consumption: tuple
    first_half_total: float


def simulate_baseline(strategy: BaselineStrategy, inst: LookaheadInstance) -> BaselineRun:
    assets = 0.0
    cons = []
    k = inst.k
    for t, y in enumerate(inst.income):
        avail = assets + y
        if strategy.kind == "consume_income":
            z = y
        elif strategy.kind == "expected_constant":
            z = strategy.level * inst.Y
        else:
            z = strategy.phi * avail
        z = min(max(z, 0.0), avail)
        cons.append(z)
        assets = avail - z
    total = float(np.sum(np.sqrt(cons)))
    return BaselineRun(total, tuple(cons), float(sum(cons[: k // 2])))


def run_baseline(strategy: BaselineStrategy, inst: LookaheadInstance) -> float:
    """Total ``sum sqrt(z_t)`` of a baseline on one instance."""
    return simulate_baseline(strategy, inst).utility


DEFAULT_ZOO = (
    BaselineStrategy("consume_income"),
    BaselineStrategy("expected_constant", level=0.75),
    BaselineStrategy("asset_fraction", phi=0.3),
)


def _completion_utility(half: int, first_total: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Second-half utility of spending leftovers plus income in equal parts."""
    left = np.maximum(half * 1.0 - first_total, 0.0)
    per = left[..., None] / half + x
    return half * np.sqrt(np.maximum(per, 0.0))


@dataclass(frozen=True)
class DeterministicPlan:
    first_half: tuple
    expected_utility: float

    def utility(self, x) -> np.ndarray:
        half = len(self.first_half)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        head = float(np.sum(np.sqrt(self.first_half)))
        return head + _completion_utility(half, np.array(sum(self.first_half)), x)


def brute_force_best_deterministic(
    k: int,
    n_consumption_grid: int = 33,
    n_x_samples: int = 64,
    x_values: Optional[Sequence[float]] = None,
) -> DeterministicPlan:
    """Exhaustive search over first-half plans for the best expected utility.

    Each of the ``k/2`` first-half amounts is taken from an equally spaced
    grid on ``[0, 1]`` (any such plan is feasible because every first-half
    income is 1).  Once ``x`` is observed the remaining assets and income
    are split evenly, which is optimal for ``sqrt``.  The expectation over
    ``x`` uses midpoint nodes unless ``x_values`` is given.
    """
    if k < 2 or k % 2:
        raise ConfigurationError(f"k must be an even integer >= 2, got {k}")
    half = k // 2
    xs = (np.arange(n_x_samples) + 0.5) / n_x_samples if x_values is None else np.asarray(x_values, dtype=float)
    n_plans = n_consumption_grid ** half
    if n_plans * len(xs) > PLAN_BUDGET:
        raise ResourceError(f"{n_plans} plans x {len(xs)} samples exceeds the budget of {PLAN_BUDGET}")
    levels = np.linspace(0.0, 1.0, n_consumption_grid)
    roots = np.sqrt(levels)
    best_value = -math.inf
    best_plan = None
    rest = np.array(list(itertools.product(range(n_consumption_grid), repeat=half - 1)), dtype=np.int64)
    rest = rest.reshape(n_consumption_grid ** (half - 1), half - 1)
    # chunk over the leading coordinate to bound memory
    for lead in range(n_consumption_grid):
        idx = np.concatenate([np.full((rest.shape[0], 1), lead), rest], axis=1)
        totals = levels[idx].sum(axis=1)
        heads = roots[idx].sum(axis=1)
        expected = heads + _completion_utility(half, totals, xs).mean(axis=1)
        j = int(np.argmax(expected))
        if expected[j] > best_value:
            best_value = float(expected[j])
            best_plan = tuple(float(levels[i]) for i in idx[j])
    return DeterministicPlan(best_plan, best_value)


def lemma1_margin(w: float, a: float) -> float:
    """``sqrt(a) + (w - a)/(2 sqrt(a)) - (w - a)**2/8 - sqrt(w)``; never negative on the domain."""
    if not (0 < w < 1):
        raise DomainError(f"w must lie in (0, 1), got {w}")
    if not (0.5 < a < 1):
        raise DomainError(f"a must lie in (1/2, 1), got {a}")
    ra = math.sqrt(a)
    return ra + (w - a) / (2 * ra) - (w - a) ** 2 / 8 - math.sqrt(w)


def lemma1_grid():
    """Margins on ``w = 0.01..0.99`` by ``a = 0.51..0.99``."""
    ws = [i / 100 for i in range(1, 100)]
    as_ = [i / 100 for i in range(51, 100)]
    return np.array([[lemma1_margin(w, a) for a in as_] for w in ws])


@dataclass(frozen=True)
class GapEstimate:
    k: int
    mean: float
    stderr: float
    n_samples: int


def utility_gaps(
    k: int,
    xs: np.ndarray,
    strategies: Sequence[BaselineStrategy] = DEFAULT_ZOO,
    plan: Optional[DeterministicPlan] = None,
) -> np.ndarray:
    """Per-draw gap: lookahead utility minus the best baseline at that ``x``."""
    xs = np.asarray(xs, dtype=float)
    best = np.full(xs.shape, -math.inf)
    for s in strategies:
        best = np.maximum(best, _vector_baseline(s, k, xs))
    if plan is not None:
        best = np.maximum(best, plan.utility(xs))
    look = k * np.sqrt((1.0 + xs) / 2.0)
    return look - best


def estimate_gap(
    k: int,
    n_samples: int,
    rng: RngStream,
    strategies: Sequence[BaselineStrategy] = DEFAULT_ZOO,
    include_brute_force: Optional[bool] = None,
    x_values: Optional[Sequence[float]] = None,
) -> GapEstimate:
    """Monte Carlo mean and standard error of the utility gap.

    ``x`` is drawn uniformly unless ``x_values`` pins the draws.  The
    brute-force plan joins the baselines by default when ``k <= 8``.
    """
    if n_samples < 2:
        raise ConfigurationError(f"n_samples must be >= 2, got {n_samples}")
    if k < 2 or k % 2:
        raise ConfigurationError(f"k must be an even integer >= 2, got {k}")
    if x_values is None:
        xs = rng.generator.uniform(0.0, 1.0, n_samples)
    else:
        xs = np.resize(np.asarray(x_values, dtype=float), n_samples)
    if include_brute_force is None:
        include_brute_force = k <= 8
    plan = None
    if include_brute_force:
        grid = 33 if k <= 4 else 17
        plan = brute_force_best_deterministic(k, grid)
    gaps = utility_gaps(k, xs, strategies, plan)
    return GapEstimate(k, float(np.mean(gaps)), float(np.std(gaps, ddof=1) / math.sqrt(n_samples)), n_samples)


def _vector_baseline(strategy: BaselineStrategy, k: int, xs: np.ndarray) -> np.ndarray:
    """Array version of :func:`simulate_baseline` over many ``x``."""
    half = k // 2
    assets = np.zeros_like(xs)
    total = np.zeros_like(xs)
    for t in range(k):
        y = np.ones_like(xs) if t < half else xs
        avail = assets + y
        if strategy.kind == "consume_income":
            z = y
        elif strategy.kind == "expected_constant":
            z = np.full_like(xs, strategy.level)
        else:
            z = strategy.phi * avail
        z = np.minimum(np.maximum(z, 0.0), avail)
        total = total + np.sqrt(z)
        assets = avail - z
    return total

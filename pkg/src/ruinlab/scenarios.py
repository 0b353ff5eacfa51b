"""Bound calculators and improvement constructions for constrained consumers.

Covers the Jensen cap on fixed (obligatory) consumption, the Hoeffding
ruin bound under impulsive consumption floors, the two ways of extending a
finite consumption plan when income covers fixed needs, and the isoelastic
split that postpones terminal exhaustion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .core import (
    IncomeProcess,
    ModelParams,
    RngStream,
    Trajectory,
    UtilityFunction,
    simulate_trajectory,
)
from .errors import ConstraintError, DomainError, InapplicableError, ThresholdError

CONSUME_ALL = "consume_all_preferred"
CAP_BINDING = "cap_binding"


def jensen_cap(u: UtilityFunction, Y: float, beta: float) -> float:
    """``u(Y) / (1 - beta)``: the most a constant plan at mean income can yield."""
    return float(u(Y)) / (1.0 - beta)


@dataclass(frozen=True)
class ObligatoryVerdict:
    cap: float
    threshold: float
    a0: float
    verdict: str
    immediate_utility: Optional[float] = None


def obligatory_probe(a0: float, u: UtilityFunction, Y: float, beta: float) -> ObligatoryVerdict:
    """Compare ``a0`` to ``u^{-1}(cap)``.

    Above the threshold, eating everything now already beats every
    constant-consumption plan, so a rational agent runs down its assets.
    """
    cap = jensen_cap(u, Y, beta)
    threshold = float(u.inverse(cap))
    verdict = CONSUME_ALL if a0 > threshold else CAP_BINDING
    immediate = float(u(a0)) if (a0 > 0 or u.finite_at_zero) else None
    return ObligatoryVerdict(cap, threshold, float(a0), verdict, immediate)


def simulate_obligatory(
    c_fixed: float,
    b: float,
    params: ModelParams,
    income: IncomeProcess,
    horizon: int,
    rng: RngStream,
) -> Trajectory:
    """Consume ``c_fixed`` every period until ruin or ``horizon``."""
    if not (c_fixed >= b >= 0):
        raise ConstraintError(f"obligatory amount {c_fixed} must be >= subsistence {b} >= 0")
    draws = income.sample(rng.generator, horizon)
    return simulate_trajectory(params.initial_assets, params.return_rate, draws, lambda t, a: c_fixed)


def obligatory_sweep(
    c_values: Sequence[float],
    params: ModelParams,
    income: IncomeProcess,
    u: UtilityFunction,
    horizon: int,
    master_seed: int = 0,
    n_paths: int = 200,
) -> list[dict]:
    """Ruin frequency and mean discounted utility for a range of fixed amounts."""
    rows = []
    for c in c_values:
        ruined = 0
        utils = []
        for i in range(n_paths):
            traj = simulate_obligatory(c, 0.0, params, income, horizon, RngStream(master_seed, i))
            ruined += traj.ruin_time is not None
            paid = [min(ct, at) for ct, at in zip(traj.consumption, traj.assets)]
            w = params.beta ** np.arange(len(paid))
            utils.append(float(np.dot(w, u(np.asarray(paid, dtype=float)))) if paid else 0.0)
        rows.append({"c_fixed": float(c), "ruin_frequency": ruined / n_paths, "mean_utility": float(np.mean(utils))})
    return rows


# ---------------------------------------------------------------------------
# impulsive consumption: Hoeffding ruin bound
# ---------------------------------------------------------------------------

def _require_drift(Y: float, B: float) -> None:
    if not (B > Y):
        raise InapplicableError(f"the ruin bound requires mean subsistence B > mean income Y (got B={B}, Y={Y})")


def hoeffding_threshold(a0: float, Y: float, B: float) -> float:
    """``2 a0 / (B - Y)``: horizons beyond this use the simplified exponent."""
    _require_drift(Y, B)
    return 2.0 * a0 / (B - Y)


def hoeffding_rate(Y: float, B: float, delta: float, epsilon: float) -> float:
    _require_drift(Y, B)
    if delta < 0 or epsilon < 0 or delta + epsilon == 0:
        raise InapplicableError("delta and epsilon must be >= 0 and not both zero")
    ratio = (B - Y) / (delta + epsilon)
    return ratio * ratio / 8.0


def hoeffding_bound(a0: float, Y: float, B: float, delta: float, epsilon: float, T: float) -> float:
    """Upper bound ``exp(-c T)`` on the chance assets are still non-negative at ``T``."""
    rate = hoeffding_rate(Y, B, delta, epsilon)
    t_min = hoeffding_threshold(a0, Y, B)
    if not (T > t_min):
        raise ThresholdError(f"horizon T={T} must exceed 2*a0/(B-Y) = {t_min}", t_min=t_min)
    return math.exp(-rate * T)


@dataclass(frozen=True)
class HoeffdingReport:
    a0: float
    Y: float
    B: float
    delta: float
    epsilon: float

    def __post_init__(self):
        hoeffding_rate(self.Y, self.B, self.delta, self.epsilon)

    @property
    def drift(self) -> float:
        return self.B - self.Y

    @property
    def rate(self) -> float:
        return hoeffding_rate(self.Y, self.B, self.delta, self.epsilon)

    @property
    def t_min(self) -> float:
        return hoeffding_threshold(self.a0, self.Y, self.B)

    def bound_at(self, T: float) -> float:
        return hoeffding_bound(self.a0, self.Y, self.B, self.delta, self.epsilon, T)


def hoeffding_slack(bound: float, n: int) -> float:
    """Three binomial standard errors at ``bound`` plus ``1/sqrt(n)``."""
    return 3.0 * math.sqrt(bound * (1.0 - bound) / n) + 1.0 / math.sqrt(n)


# ---------------------------------------------------------------------------
# extending finite plans when income covers fixed needs
# ---------------------------------------------------------------------------

def _check_extension(c_T: float, b: float, beta: float) -> None:
    if not (beta > 0.5 and beta < 1):
        raise ConstraintError(f"the construction needs 1/2 < beta < 1, got {beta}")
    if b < 0:
        raise ConstraintError(f"subsistence must be >= 0, got {b}")


def improve_case1(c_T: float, b: float, beta: float, u: UtilityFunction) -> float:
    """Gain (per ``beta**T``) of replacing ``c_T`` by ``c_T - b, b, b, ...`` when ``c_T >= 2b``."""
    _check_extension(c_T, b, beta)
    if not (c_T >= 2 * b):
        raise ConstraintError(f"case 1 needs c_T >= 2b (c_T={c_T}, b={b})")
    return float(u(c_T - b)) + beta / (1.0 - beta) * float(u(b)) - float(u(c_T))


def improve_case2(c_T: float, b: float, beta: float, u: UtilityFunction) -> float:
    """Gain (per ``beta**T``) of replacing ``c_T`` by ``b, b, ...`` when ``b <= c_T < 2b``."""
    _check_extension(c_T, b, beta)
    if not (b <= c_T < 2 * b):
        raise ConstraintError(f"case 2 needs b <= c_T < 2b (c_T={c_T}, b={b})")
    return float(u(b)) / (1.0 - beta) - float(u(c_T))


# ---------------------------------------------------------------------------
# isoelastic split point
# ---------------------------------------------------------------------------

def isoelastic_split_epsilon(c_T: float, beta: float, lam: float) -> float:
    """Split ``eps`` with ``beta * eps**-lam == (c_T - eps)**-lam``."""
    if not (c_T > 0):
        raise DomainError(f"c_T must be > 0, got {c_T}")
    if not (0 < beta < 1):
        raise DomainError(f"beta must lie in (0, 1), got {beta}")
    if not (lam > 0) or lam == 1:
        raise DomainError(f"lambda must be > 0 and != 1, got {lam}")
    return c_T / (1.0 + beta ** (-1.0 / lam))


def foc_residual(c_T: float, beta: float, lam: float, eps: float) -> float:
    """Relative first-order-condition residual at ``eps``."""
    rhs = (c_T - eps) ** (-lam)
    return abs(beta * eps ** (-lam) - rhs) / rhs


def split_gain(c_T: float, beta: float, u: UtilityFunction, eps: float) -> float:
    """``u(c_T - eps) + beta u(eps) - u(c_T)``; positive favours splitting."""
    if not (0 <= eps < c_T):
        raise DomainError(f"split must satisfy 0 <= eps < c_T (eps={eps}, c_T={c_T})")
    return float(u(c_T - eps)) + beta * float(u(eps)) - float(u(c_T))

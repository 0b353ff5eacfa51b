"""Seeded multi-agent ruin simulations and ruin-time histograms."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .core import (
    IncomeProcess,
    ModelParams,
    RngStream,
    SubsistenceProcess,
    Trajectory,
    simulate_trajectory,
)
from .errors import ConfigurationError
from .solver import Policy, policy_consume

SCENARIO_KINDS = ("obligatory", "impulsive", "true_agency", "custom")
_CHUNK = 1024


@dataclass(frozen=True, eq=False)
class Scenario:
    """How consumption is chosen each period.

    * ``obligatory``: fixed ``c_fixed``.
    * ``impulsive``: ``max(b_t, policy(a))``, or exactly ``b_t`` without a policy.
    * ``true_agency`` / ``custom``: ``policy(a)``, floored at ``b_t`` when a
      subsistence process is attached.
    """

    kind: str
    c_fixed: Optional[float] = None
    policy: Optional[Policy] = None
    subsistence: Optional[SubsistenceProcess] = None

    def __post_init__(self):
        if self.kind not in SCENARIO_KINDS:
            raise ConfigurationError(f"unknown scenario {self.kind!r}; expected one of {SCENARIO_KINDS}")
        if self.kind == "obligatory":
            if self.c_fixed is None or not (self.c_fixed >= 0):
                raise ConfigurationError("obligatory scenario needs c_fixed >= 0")
        elif self.kind == "impulsive":
            if self.subsistence is None:
                raise ConfigurationError("impulsive scenario needs a subsistence process")
        elif self.policy is None:
            raise ConfigurationError(f"{self.kind} scenario needs a solved policy")

    @classmethod
    def obligatory(cls, c_fixed: float) -> "Scenario":
        return cls("obligatory", c_fixed=float(c_fixed))

    @classmethod
    def impulsive(cls, policy: Optional[Policy], subsistence: SubsistenceProcess) -> "Scenario":
        return cls("impulsive", policy=policy, subsistence=subsistence)

    @classmethod
    def true_agency(cls, policy: Policy, subsistence: Optional[SubsistenceProcess] = None) -> "Scenario":
        return cls("true_agency", policy=policy, subsistence=subsistence)

    @classmethod
    def custom(cls, policy: Policy) -> "Scenario":
        return cls("custom", policy=policy)

    @property
    def mode(self) -> int:
        if self.kind == "obligatory":
            return 0
        if self.policy is None:
            return 1
        return 3 if self.subsistence is not None else 2


@dataclass(frozen=True, eq=False)
class CohortConfig:
    scenario: Scenario
    model: ModelParams
    income: IncomeProcess
    n_agents: int = 50_000
    horizon: int = 100
    master_seed: int = 0

    def __post_init__(self):
        if self.n_agents < 1 or self.horizon < 1:
            raise ConfigurationError("n_agents and horizon must be >= 1")
        if not (0 <= self.master_seed < 2**64):
            raise ConfigurationError("master_seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class RuinHistogram:
    counts: dict
    survivors: int
    n_agents: int
    horizon: int

    def __post_init__(self):
        if any(c < 0 for c in self.counts.values()) or self.survivors < 0:
            raise ConfigurationError("histogram counts must be non-negative")
        if sum(self.counts.values()) + self.survivors != self.n_agents:
            raise ConfigurationError("histogram counts do not add up to n_agents")

    @classmethod
    def empty(cls, horizon: int) -> "RuinHistogram":
        return cls({}, 0, 0, horizon)

    @classmethod
    def from_ruin_times(cls, ruin: np.ndarray, horizon: int) -> "RuinHistogram":
        ruin = np.asarray(ruin)
        hit = ruin[ruin >= 0]
        times, counts = np.unique(hit, return_counts=True)
        return cls(
            {int(t): int(c) for t, c in zip(times, counts)},
            int(np.sum(ruin < 0)),
            int(len(ruin)),
            horizon,
        )

    def survival_fraction(self, t: int) -> float:
        """Fraction of agents not ruined in periods ``0 .. t-1`` (assets at ``t`` positive)."""
        alive = self.survivors + sum(c for s, c in self.counts.items() if s >= t)
        return alive / self.n_agents


def merge_histograms(h1: RuinHistogram, h2: RuinHistogram) -> RuinHistogram:
    if h1.horizon != h2.horizon:
        raise ConfigurationError(f"cannot merge histograms with horizons {h1.horizon} and {h2.horizon}")
    counts = dict(h1.counts)
    for t, c in h2.counts.items():
        counts[t] = counts.get(t, 0) + c
    return RuinHistogram(dict(sorted(counts.items())), h1.survivors + h2.survivors, h1.n_agents + h2.n_agents, h1.horizon)


def summarize(h: RuinHistogram) -> dict:
    """Ruin/survivor fractions, mode and median ruin time, early-ruin share.

    Median and mode are over ruined agents only (None when nobody is
    ruined); the mode takes the earliest of tied bins.
    """
    if h.n_agents < 1:
        raise ConfigurationError("cannot summarise an empty histogram")
    ruined = sum(h.counts.values())
    median = mode = None
    if ruined:
        times = sorted(h.counts)
        mode = max(times, key=lambda t: (h.counts[t], -t))
        expanded = np.repeat(np.array(times, dtype=float), [h.counts[t] for t in times])
        median = float(np.median(expanded))
    early = sum(c for t, c in h.counts.items() if t < 10)
    return {
        "ruin_fraction": ruined / h.n_agents,
        "survivor_fraction": h.survivors / h.n_agents,
        "mode_ruin_time": mode,
        "median_ruin_time": median,
        "fraction_ruined_first_10": early / h.n_agents,
    }


def _draws(config: CohortConfig, agent_index: int):
    """Income then subsistence for one agent, from its own stream."""
    gen = RngStream(config.master_seed, agent_index).generator
    income = config.income.sample(gen, config.horizon)
    sub = config.scenario.subsistence
    floor = sub.sample(gen, config.horizon) if sub is not None else None
    return income, floor


def agent_trajectory(config: CohortConfig, agent_index: int) -> Trajectory:
    income, floor = _draws(config, agent_index)
    sc = config.scenario

    def rule(t, a):
        if sc.kind == "obligatory":
            return sc.c_fixed
        if sc.policy is None:
            return floor[t]
        c = policy_consume(sc.policy, max(a, 0.0))
        return max(floor[t], c) if floor is not None else c

    return simulate_trajectory(config.model.initial_assets, config.model.return_rate, income, rule)


def simulate_agent(config: CohortConfig, agent_index: int) -> Optional[int]:
    return agent_trajectory(config, agent_index).ruin_time


def _run_chunk(config: CohortConfig, start: int, stop: int) -> RuinHistogram:
    rows = stop - start
    income = np.empty((rows, config.horizon))
    floor = np.zeros((rows, config.horizon))
    for r in range(rows):
        y, b = _draws(config, start + r)
        income[r] = y
        if b is not None:
            floor[r] = b
    sc = config.scenario
    pol = sc.policy
    out = np.empty(rows, dtype=np.int64)
    kernels.simulate_rows(
        income,
        floor,
        sc.mode,
        float(sc.c_fixed or 0.0),
        np.ascontiguousarray(pol.consumption if pol is not None else np.zeros(2)),
        pol.a_min if pol is not None else 0.0,
        pol.step if pol is not None else 1.0,
        pol.c_floor if pol is not None else 0.0,
        float(config.model.initial_assets),
        float(config.model.return_rate),
        out,
    )
    return RuinHistogram.from_ruin_times(out, config.horizon)


def run_cohort(config: CohortConfig, workers: Optional[int] = None) -> RuinHistogram:
    """Aggregate all agents into a histogram.

    Agent ``i`` always uses ``RngStream(master_seed, i)`` and chunks merge
    through an associative, commutative sum, so the result does not depend
    on the worker count.
    """
    workers = kernels.worker_count() if workers is None else max(1, workers)
    bounds = [(s, min(s + _CHUNK, config.n_agents)) for s in range(0, config.n_agents, _CHUNK)]
    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda b: _run_chunk(config, *b), bounds))
    else:
        parts = [_run_chunk(config, *b) for b in bounds]
    hist = RuinHistogram.empty(config.horizon)
    for part in parts:
        hist = merge_histograms(hist, part)
    return hist

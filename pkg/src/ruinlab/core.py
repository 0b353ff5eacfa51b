"""Domain types and primitive operations of the discounted-utility model.

Assets evolve as ``a[t+1] = R * (a[t] - c[t]) + y[t]`` with income arriving
after consumption, and an agent is ruined at the first ``t`` with
``a[t+1] <= 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.special import ndtri

from .errors import ConfigurationError, DivergenceError, DomainError

UTILITY_KINDS = ("sqrt", "log", "isoelastic_shifted", "isoelastic_unshifted")
INCOME_KINDS = ("constant", "lognormal", "bounded_uniform", "fixed_sequence", "lookahead_instance")
SUBSISTENCE_KINDS = ("constant", "bounded_uniform", "lognormal")


# ---------------------------------------------------------------------------
# utility
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class UtilityFunction:
    """Concave per-period utility ``u(c)``.

    ``lam`` is the isoelastic curvature and is ignored (must be None) for
    the ``sqrt`` and ``log`` kinds.
    """

    kind: str = "sqrt"
    lam: Optional[float] = None

    def __post_init__(self):
        if self.kind not in UTILITY_KINDS:
            raise ConfigurationError(f"unknown utility kind {self.kind!r}; expected one of {UTILITY_KINDS}")
        if self.kind.startswith("isoelastic"):
            if self.lam is None:
                raise ConfigurationError(f"{self.kind} utility requires lambda")
            if not (self.lam > 0) or self.lam == 1:
                raise ConfigurationError(f"isoelastic lambda must be > 0 and != 1, got {self.lam}")
        elif self.lam is not None:
            raise ConfigurationError(f"{self.kind} utility takes no lambda")

    @property
    def finite_at_zero(self) -> bool:
        if self.kind == "sqrt":
            return True
        if self.kind == "log":
            return False
        return self.lam < 1

    def value_at_zero(self) -> float:
        if not self.finite_at_zero:
            raise DivergenceError(f"{self.kind} utility diverges to -inf at c = 0")
        if self.kind == "isoelastic_shifted":
            return -1.0 / (1.0 - self.lam)
        return 0.0

    def __call__(self, c):
        """Vectorised evaluation; same error semantics as :func:`eval_utility`."""
        c = np.asarray(c, dtype=float)
        if np.any(c < 0) or np.any(np.isnan(c)):
            raise DomainError("utility is undefined for negative consumption")
        if not self.finite_at_zero and np.any(c == 0):
            raise DivergenceError(f"{self.kind} utility diverges to -inf at c = 0")
        if self.kind == "sqrt":
            out = np.sqrt(c)
        elif self.kind == "log":
            out = np.log(c)
        else:
            p = 1.0 - self.lam
            out = (c ** p - 1.0) / p if self.kind == "isoelastic_shifted" else c ** p / p
        return out if out.ndim else float(out)

    def inverse(self, v):
        v = np.asarray(v, dtype=float)
        if self.kind == "sqrt":
            if np.any(v < 0):
                raise DomainError("sqrt utility takes values in [0, inf)")
            out = v * v
        elif self.kind == "log":
            out = np.exp(v)
        else:
            p = 1.0 - self.lam
            base = p * v + 1.0 if self.kind == "isoelastic_shifted" else p * v
            # lam < 1 attains base == 0 at c = 0; lam > 1 only approaches it
            if np.any(base < 0) or (self.lam > 1 and np.any(base == 0)):
                raise DomainError(f"value outside the range of {self.kind} utility with lambda={self.lam}")
            out = base ** (1.0 / p)
        return out if out.ndim else float(out)


def eval_utility(u: UtilityFunction, c: float) -> float:
    """Evaluate ``u(c)``.

    Raises :class:`DomainError` for ``c < 0`` and :class:`DivergenceError`
    when ``u(0)`` is minus infinity.
    """
    return float(u(c))


def invert_utility(u: UtilityFunction, v: float) -> float:
    return float(u.inverse(v))


def discounted_utility(c_seq: Sequence[float], beta: float, u: UtilityFunction) -> float:
    """``sum_t beta**t * u(c_t)`` over a finite consumption series."""
    values = u(np.asarray(c_seq, dtype=float))
    weights = beta ** np.arange(len(c_seq), dtype=float)
    return float(np.dot(weights, np.atleast_1d(values)))


# ---------------------------------------------------------------------------
# model parameters and stochastic drivers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModelParams:
    beta: float
    return_rate: float = 1.0
    initial_assets: float = 0.0

    def __post_init__(self):
        if not (0.0 < self.beta < 1.0):
            raise ConfigurationError(f"beta must lie in (0, 1), got {self.beta}")
        if not (self.return_rate >= 0.0):
            raise ConfigurationError(f"return_rate must be >= 0, got {self.return_rate}")
        if not (self.initial_assets >= 0.0):
            raise ConfigurationError(f"initial_assets must be >= 0, got {self.initial_assets}")


def lognormal_log_params(mean: float, std: float) -> tuple[float, float]:
    """Convert a level-space mean/std into log-space ``(mu, sigma)``."""
    m2 = mean * mean
    mu = math.log(m2 / math.sqrt(m2 + std * std))
    sigma = math.sqrt(math.log1p(std * std / m2))
    return mu, sigma


def _uniform_quantiles(n: int) -> np.ndarray:
    return (np.arange(n, dtype=float) + 0.5) / n


@dataclass(frozen=True)
class IncomeProcess:
    """Per-period income ``y_t``.

    ``mean`` is the level mean Y.  For ``lookahead_instance`` it is the
    income scale: the first ``k/2`` periods pay ``mean`` and the rest pay
    ``x * mean`` with ``x ~ U(0, 1)`` drawn once per stream.
    """

    kind: str = "constant"
    mean: float = 0.0
    std: float = 0.0
    half_width: float = 0.0
    sequence: tuple = ()
    k: int = 0

    def __post_init__(self):
        if self.kind not in INCOME_KINDS:
            raise ConfigurationError(f"unknown income kind {self.kind!r}; expected one of {INCOME_KINDS}")
        if self.kind == "fixed_sequence":
            object.__setattr__(self, "sequence", tuple(float(s) for s in self.sequence))
            if not self.sequence:
                raise ConfigurationError("fixed_sequence income needs a non-empty sequence")
            if min(self.sequence) < 0:
                raise ConfigurationError("income draws must be non-negative")
            return
        if not (self.mean >= 0):
            raise ConfigurationError(f"income mean must be >= 0, got {self.mean}")
        if self.kind == "lognormal" and not (self.mean > 0 and self.std >= 0):
            raise ConfigurationError("lognormal income needs mean > 0 and std >= 0")
        if self.kind == "bounded_uniform" and not (0 <= self.half_width <= self.mean):
            raise ConfigurationError("bounded_uniform income needs 0 <= half_width <= mean")
        if self.kind == "lookahead_instance" and (self.k < 2 or self.k % 2):
            raise ConfigurationError(f"lookahead_instance needs an even k >= 2, got {self.k}")

    @property
    def expected(self) -> float:
        if self.kind == "fixed_sequence":
            return float(np.mean(self.sequence))
        if self.kind == "lookahead_instance":
            return 0.75 * self.mean
        return self.mean

    @property
    def deterministic(self) -> bool:
        return (
            self.kind in ("constant", "fixed_sequence")
            or (self.kind == "lognormal" and self.std == 0)
            or (self.kind == "bounded_uniform" and self.half_width == 0)
        )

    def sample(self, gen: np.random.Generator, n: int) -> np.ndarray:
        """First ``n`` periods of income drawn from ``gen``."""
        if self.kind == "constant":
            return np.full(n, float(self.mean))
        if self.kind == "lognormal":
            if self.std == 0:
                return np.full(n, float(self.mean))
            mu, sigma = lognormal_log_params(self.mean, self.std)
            return gen.lognormal(mu, sigma, n)
        if self.kind == "bounded_uniform":
            return gen.uniform(self.mean - self.half_width, self.mean + self.half_width, n)
        if self.kind == "fixed_sequence":
            seq = np.asarray(self.sequence)
            return np.resize(seq, n)
        x = gen.uniform(0.0, 1.0)
        t = np.arange(n)
        half = self.k // 2
        # beyond k the instance continues at the lookahead plan's level
        return np.where(t < half, self.mean, np.where(t < self.k, x * self.mean, 0.5 * (1 + x) * self.mean))

    def nodes(self, n: int) -> np.ndarray:
        """Equally weighted quantile nodes for the one-period expectation."""
        if self.deterministic and self.kind != "fixed_sequence":
            return np.array([float(self.mean)])
        q = _uniform_quantiles(n)
        if self.kind == "lognormal":
            mu, sigma = lognormal_log_params(self.mean, self.std)
            return np.exp(mu + sigma * ndtri(q))
        if self.kind == "bounded_uniform":
            return self.mean - self.half_width + 2.0 * self.half_width * q
        if self.kind == "fixed_sequence":
            if len(set(self.sequence)) == 1:
                return np.array([self.sequence[0]])
            return np.quantile(np.asarray(self.sequence), q)
        raise ConfigurationError("lookahead_instance income has no stationary distribution for the solver")


@dataclass(frozen=True)
class SubsistenceProcess:
    """Per-period subsistence floor ``b_t`` with mean B.

    ``bounded_uniform`` draws lie in ``[B - half_width, B + half_width]``;
    ``lognormal`` uses ``std`` as the level-space standard deviation.
    """

    kind: str = "constant"
    mean: float = 0.0
    half_width: float = 0.0
    std: float = 0.0

    def __post_init__(self):
        if self.kind not in SUBSISTENCE_KINDS:
            raise ConfigurationError(
                f"unknown subsistence kind {self.kind!r}; expected one of {SUBSISTENCE_KINDS}"
            )
        if not (self.mean >= 0):
            raise ConfigurationError(f"subsistence mean must be >= 0, got {self.mean}")
        if self.kind == "constant" and (self.half_width != 0 or self.std != 0):
            raise ConfigurationError("constant subsistence has zero spread")
        if self.kind == "bounded_uniform" and not (0 <= self.half_width <= self.mean):
            raise ConfigurationError("bounded_uniform subsistence needs 0 <= half_width <= mean")
        if self.kind == "lognormal" and not (self.mean > 0 and self.std >= 0):
            raise ConfigurationError("lognormal subsistence needs mean > 0 and std >= 0")

    def sample(self, gen: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == "constant" or (self.kind == "lognormal" and self.std == 0):
            return np.full(n, float(self.mean))
        if self.kind == "bounded_uniform":
            return gen.uniform(self.mean - self.half_width, self.mean + self.half_width, n)
        mu, sigma = lognormal_log_params(self.mean, self.std)
        return gen.lognormal(mu, sigma, n)


class RngStream:
    """Reproducible random stream keyed by ``(master_seed, stream_index)``.

    Streams are derived with :class:`numpy.random.SeedSequence` spawn keys,
    so distinct indices give independent PCG64 generators.  A stream is
    stateful and must be owned by a single task.
    """

    __slots__ = ("master_seed", "stream_index", "generator")

    def __init__(self, master_seed: int, stream_index: int = 0):
        if master_seed < 0 or stream_index < 0:
            raise ConfigurationError("seeds and stream indices must be non-negative")
        self.master_seed = int(master_seed)
        self.stream_index = int(stream_index)
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_index,))
        self.generator = np.random.Generator(np.random.PCG64(seq))

    def __repr__(self):
        return f"RngStream(master_seed={self.master_seed}, stream_index={self.stream_index})"


def draw_income(p: IncomeProcess, rng: RngStream) -> float:
    return float(p.sample(rng.generator, 1)[0])


# ---------------------------------------------------------------------------
# dynamics and ruin
# ---------------------------------------------------------------------------

def step_assets(a: float, c: float, R: float, y: float) -> float:
    """Raw recurrence ``R * (a - c) + y``: subtract, multiply, add."""
    return R * (a - c) + y


def detect_ruin(assets: Sequence[float]) -> Optional[int]:
    """Smallest ``t`` with ``assets[t + 1] <= 0``, or None."""
    if len(assets) == 0:
        raise ConfigurationError("asset series is empty")
    for t in range(len(assets) - 1):
        if assets[t + 1] <= 0:
            return t
    return None


@dataclass(frozen=True)
class Trajectory:
    assets: tuple
    consumption: tuple
    income: tuple
    ruin_time: Optional[int] = None

    def __post_init__(self):
        if len(self.assets) != len(self.consumption) + 1 or len(self.income) != len(self.consumption):
            raise ConfigurationError("assets must have exactly one more entry than consumption and income")


def simulate_trajectory(
    a0: float,
    R: float,
    income: Sequence[float],
    rule: Callable[[int, float], float],
    horizon: Optional[int] = None,
) -> Trajectory:
    """Run the asset recurrence under a consumption ``rule(t, a)``.

    A period whose required consumption exceeds available assets is a
    ruin: consumption happens before income, so the recorded terminal
    entry is the shortfall ``R * (a - c)`` and the income is not credited.
    """
    horizon = len(income) if horizon is None else horizon
    assets = [float(a0)]
    cons: list[float] = []
    inc: list[float] = []
    a = float(a0)
    for t in range(horizon):
        c = float(rule(t, a))
        y = float(income[t])
        cons.append(c)
        inc.append(y)
        if c > a:
            assets.append(R * (a - c))
            return Trajectory(tuple(assets), tuple(cons), tuple(inc), t)
        a = step_assets(a, c, R, y)
        assets.append(a)
        if a <= 0:
            return Trajectory(tuple(assets), tuple(cons), tuple(inc), t)
    return Trajectory(tuple(assets), tuple(cons), tuple(inc), None)

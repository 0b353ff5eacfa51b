import numpy as np
import pytest

from ruinlab.core import IncomeProcess, ModelParams, UtilityFunction
from ruinlab.solver import GridSpec, solve_policy


def cake_spec(**kw) -> GridSpec:
    settings = dict(a_min=0.0, a_max=10.0, n_points=2001, n_consumption_points=513, tolerance=1e-6)
    settings.update(kw)
    return GridSpec(**settings)


@pytest.fixture(scope="session")
def sqrt_u():
    return UtilityFunction("sqrt")


@pytest.fixture(scope="session")
def cake_policy():
    """Cake-eating: no income, beta 0.5, sqrt utility on [0, 10]."""
    params = ModelParams(beta=0.5, return_rate=1.0, initial_assets=0.0)
    income = IncomeProcess("constant", mean=0.0)
    return solve_policy(params, income, UtilityFunction("sqrt"), spec=cake_spec())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)

"""Named calibrations for monthly household experiments.

Dollar figures are 2019 U.S. monthly values: median net worth as initial
assets, lognormal income by class, and a mean monthly expenditure used as
the subsistence floor.  The floor's spread is not part of the calibration;
a coefficient of variation of 1.0 is our own choice (with 0.2 nobody can be
ruined in the first ten months under the solved policy).
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import IncomeProcess, ModelParams, SubsistenceProcess
from .errors import ConfigurationError

EXPENDITURE_CV = 1.0
HORIZON = 100
N_AGENTS = 50_000


@dataclass(frozen=True)
class Preset:
    name: str
    beta: float
    initial_assets: float
    income_mean: float
    income_std: float
    expenditure_mean: float

    @property
    def model(self) -> ModelParams:
        return ModelParams(beta=self.beta, return_rate=1.0, initial_assets=self.initial_assets)

    @property
    def income(self) -> IncomeProcess:
        return IncomeProcess("lognormal", mean=self.income_mean, std=self.income_std)

    @property
    def subsistence(self) -> SubsistenceProcess:
        return SubsistenceProcess(
            "lognormal", mean=self.expenditure_mean, std=EXPENDITURE_CV * self.expenditure_mean
        )


_GENERAL = dict(initial_assets=141_140.0, income_mean=5957.25, income_std=378.74, expenditure_mean=5253.0)

PRESETS = {
    "general": Preset("general", beta=0.95, **_GENERAL),
    "low_income": Preset(
        "low_income", beta=0.5, initial_assets=141_140.0,
        income_mean=1899.33, income_std=77.0, expenditure_mean=2850.0,
    ),
    "high_income": Preset(
        "high_income", beta=0.9, initial_assets=141_140.0,
        income_mean=8869.92, income_std=199.60, expenditure_mean=7082.83,
    ),
    "hs_diploma": Preset("hs_diploma", beta=0.5, **_GENERAL),
    "college": Preset("college", beta=0.83, **_GENERAL),
}


def get_preset(name: str) -> Preset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigurationError(f"unknown preset {name!r}; expected one of {sorted(PRESETS)}") from None

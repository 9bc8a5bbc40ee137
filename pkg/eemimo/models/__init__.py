"""Rate, power and traffic models of a single cell."""

from .params import PaKind, PaModel, SystemParams
from .power import PowerBreakdown, pa_input_power, total_power
from .rate import RateContext, avg_user_rate, monte_carlo_rate_oracle
from .traffic import LoadProfile, QueueModel, StateDistribution, load_profile, steady_state

__all__ = [
    "LoadProfile",
    "PaKind",
    "PaModel",
    "PowerBreakdown",
    "QueueModel",
    "RateContext",
    "StateDistribution",
    "SystemParams",
    "avg_user_rate",
    "load_profile",
    "monte_carlo_rate_oracle",
    "pa_input_power",
    "steady_state",
    "total_power",
]

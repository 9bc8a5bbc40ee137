"""State-averaged energy efficiency, power and rate of one cell in one interval."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .params import SystemParams
from .power import Accounting, idle_power, power_vector


@dataclass(slots=True, frozen=True)
class IntervalMetrics:
    """``ee`` in bit/J, ``power`` in W, ``mean_rate`` in bit/s per user."""

    ee: float
    power: float
    mean_rate: float
    mean_antennas: float
    idle_probability: float
    throughput: float

    def to_dict(self) -> dict[str, float]:
        return asdict(self)


def interval_metrics(
    pi: np.ndarray,
    antennas: np.ndarray,
    rates: np.ndarray,
    params: SystemParams,
    accounting: Accounting | str = Accounting.IDLE_OFF,
) -> IntervalMetrics:
    """Average a per-state policy over ``pi``.

    ``antennas`` and ``rates`` are indexed by the number of users, entry 0
    being the empty cell. EE is ``sum_{n>=1} pi(n) n R(n) / P(n)`` with the
    full power model (coding term included).
    """

    pi = np.asarray(pi, dtype=float)
    antennas = np.asarray(antennas, dtype=float)
    rates = np.asarray(rates, dtype=float)
    if not (pi.shape == antennas.shape == rates.shape):
        raise ValueError("pi, antennas and rates must have one entry per user state")

    users = np.arange(1, pi.shape[0])
    active_pi = pi[1:]
    power = power_vector(users, antennas[1:], rates[1:], params)
    carried = users * rates[1:]

    mean_power = float(np.dot(active_pi, power) + pi[0] * idle_power(params, accounting))
    weighted_users = float(np.dot(active_pi, users))
    throughput = float(np.dot(active_pi, carried))
    return IntervalMetrics(
        ee=float(np.dot(active_pi, carried / power)),
        power=mean_power,
        mean_rate=throughput / weighted_users if weighted_users > 0.0 else 0.0,
        mean_antennas=float(np.dot(pi, antennas)),
        idle_probability=float(pi[0]),
        throughput=throughput,
    )


def network_metrics(
    pis: np.ndarray,
    antennas: np.ndarray,
    rates: np.ndarray,
    params: SystemParams,
    accounting: Accounting | str = Accounting.IDLE_OFF,
) -> IntervalMetrics:
    """Cell average of :func:`interval_metrics` over the rows of ``pis``."""

    per_cell = [
        interval_metrics(pi, cell_antennas, cell_rates, params, accounting)
        for pi, cell_antennas, cell_rates in zip(pis, antennas, rates)
    ]
    fields = IntervalMetrics.__dataclass_fields__
    return IntervalMetrics(**{name: float(np.mean([getattr(m, name) for m in per_cell])) for name in fields})


__all__ = ["IntervalMetrics", "interval_metrics", "network_metrics"]

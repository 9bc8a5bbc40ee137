"""Base-station power consumption: PA input power, baseband and the affine split.

The total power of a BS serving ``n`` users with ``M`` antennas is written as
``C0 + C1 * M`` plus the coding term ``A * n * R`` which is tracked on its own
so the optimiser can drop it (it does not move the EE argmax).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .params import PaKind, PaModel, SystemParams

_LIMIT_TOLERANCE = 1e-12


class Accounting(str, Enum):
    """How an idle BS (no users) is charged."""

    IDLE_OFF = "idle-off"
    ACTIVE_IDLE = "active-idle"

    @classmethod
    def parse(cls, value: str | Accounting) -> Accounting:
        if isinstance(value, Accounting):
            return value
        try:
            return cls(str(value).lower().replace("_", "-"))
        except ValueError as exc:
            raise ValueError(f"unknown accounting mode: {value!r}") from exc


@dataclass(slots=True, frozen=True)
class PowerBreakdown:
    """Components of the consumed power, all in Watt (``c1`` per antenna)."""

    c0: float
    c1: float
    total: float
    rate_coding_term: float


def pa_input_power(p: float, pa: PaModel) -> float:
    """Input power one PA draws to deliver an average output ``p``."""

    if p < 0.0:
        raise ValueError("transmit power must be non-negative")
    peak = pa.peak_power(p)
    limit = peak / pa.backoff_factor
    if p > limit * (1.0 + _LIMIT_TOLERANCE):
        raise ValueError(
            f"p={p:.6g} W exceeds the PAPR backoff limit {limit:.6g} W of a {peak:.6g} W amplifier"
        )
    if pa.kind is PaKind.TPA:
        return math.sqrt(p * peak) / pa.max_efficiency
    return (p + pa.epsilon * peak) / ((1.0 + pa.epsilon) * pa.max_efficiency)


def pa_input_power_array(p: np.ndarray, pa: PaModel) -> np.ndarray:
    """Vectorised :func:`pa_input_power` for positive ``p`` within the limit."""

    p = np.asarray(p, dtype=float)
    peak = p * pa.backoff_factor if pa.max_output_power is None else np.full_like(p, pa.max_output_power)
    if pa.kind is PaKind.TPA:
        return np.sqrt(p * peak) / pa.max_efficiency
    return (p + pa.epsilon * peak) / ((1.0 + pa.epsilon) * pa.max_efficiency)


def _linear_processing_coefficient(params: SystemParams) -> float:
    if params.per_block_linear_processing:
        return 3.0 * params.bandwidth / (params.coherence_symbols * params.l_bs)
    return 3.0 * params.bandwidth / params.l_bs


def baseband_coefficients(users, params: SystemParams):
    """Return ``(C0_bb, C1_bb)`` for ``users`` (scalar or array), without the coding term."""

    b, tc, l_bs = params.bandwidth, params.coherence_symbols, params.l_bs
    n = np.asarray(users, dtype=float)
    c0 = params.p_syn + b / (3.0 * tc * l_bs) * n**3
    c1 = params.p_bs + b / l_bs * (2.0 + 1.0 / tc) * n + _linear_processing_coefficient(params) * n**2
    if np.ndim(c0) == 0:
        return float(c0), float(c1)
    return c0, c1


def baseband_power(antennas: int, users: int, rate_per_user: float, params: SystemParams) -> tuple[float, float, float]:
    """Baseband coefficients ``(C0_bb, C1_bb, A * n * R)``.

    ``antennas`` does not enter the coefficients; it is accepted to keep the
    signature aligned with :func:`total_power`.
    """

    if users < 0 or antennas < 0:
        raise ValueError("users and antennas must be non-negative")
    c0, c1 = baseband_coefficients(users, params)
    return c0, c1, params.coding_coefficient * users * rate_per_user


def pa_coefficient(params: SystemParams, p: float | None = None) -> float:
    """``C1_PA``: PA input power per active antenna at ``p`` (defaults to the params value)."""

    return pa_input_power(params.per_antenna_power if p is None else p, params.pa)


def total_power(
    antennas: int,
    users: int,
    rate_per_user: float,
    params: SystemParams,
    include_rate_term: bool = True,
    accounting: Accounting | str = Accounting.IDLE_OFF,
) -> PowerBreakdown:
    """Total BS power ``C0 + C1 * M`` (+ ``A n R`` when ``include_rate_term``)."""

    c0_bb, c1_bb, coding = baseband_power(antennas, users, rate_per_user, params)
    c0 = c0_bb + params.p_oth
    c1 = c1_bb + pa_coefficient(params)

    if users == 0:
        mode = Accounting.parse(accounting)
        total = c0 if mode is Accounting.ACTIVE_IDLE else 0.0
        return PowerBreakdown(c0=c0, c1=c1, total=total, rate_coding_term=0.0)

    total = c0 + c1 * antennas
    if include_rate_term:
        total += coding
    return PowerBreakdown(c0=c0, c1=c1, total=total, rate_coding_term=coding)


def idle_power(params: SystemParams, accounting: Accounting | str) -> float:
    return total_power(0, 0, 0.0, params, accounting=accounting).total


def power_vector(
    users: np.ndarray,
    antennas: np.ndarray,
    rates: np.ndarray,
    params: SystemParams,
    *,
    include_rate_term: bool = True,
    pa_power: float | None = None,
) -> np.ndarray:
    """Vectorised total power for ``users >= 1`` (``pa_power`` overrides ``C1_PA``)."""

    c0_bb, c1_bb = baseband_coefficients(users, params)
    c1_pa = pa_coefficient(params) if pa_power is None else pa_power
    total = c0_bb + params.p_oth + (c1_bb + c1_pa) * np.asarray(antennas, dtype=float)
    if include_rate_term:
        total = total + params.coding_coefficient * np.asarray(users, dtype=float) * np.asarray(rates, dtype=float)
    return total


__all__ = [
    "Accounting",
    "PowerBreakdown",
    "baseband_coefficients",
    "baseband_power",
    "idle_power",
    "pa_coefficient",
    "pa_input_power",
    "pa_input_power_array",
    "power_vector",
    "total_power",
]

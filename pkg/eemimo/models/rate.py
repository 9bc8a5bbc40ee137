"""Average per-user downlink rate of a zero-forcing massive-MIMO cell.

``avg_user_rate`` is the closed-form lower bound used throughout the
optimisation; ``monte_carlo_rate_oracle`` estimates the ergodic rate it bounds
by drawing Rayleigh channels and forming normalised ZF precoders.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .params import SystemParams

logger = logging.getLogger(__name__)

_ORACLE_CHUNK = 20000


@dataclass(slots=True, frozen=True)
class RateContext:
    """Operating point of one cell.

    ``interference`` is the normalised average inter-cell interference
    ``sum_d G_cd * p * M_d`` (Watt); ``antennas`` may be fractional only for
    interferers, the serving cell uses an integer count.
    """

    own_gain: float
    interference: float
    users: int
    antennas: float

    def __post_init__(self) -> None:
        if self.interference < 0.0:
            raise ValueError("interference must be non-negative")
        if self.own_gain <= 0.0:
            raise ValueError("own_gain must be positive")
        if self.users < 1:
            raise ValueError("per-user rate is undefined without users (n = 0)")
        if self.antennas < self.users:
            raise ValueError("zero forcing needs at least as many antennas as users")

    def denominator(self, params: SystemParams) -> float:
        return params.noise_power * self.own_gain + self.interference


def rate_prefactor(params: SystemParams) -> float:
    """``B * (1 - alpha K_max / T_c)`` in bit/s per unit of log2."""

    return params.bandwidth * params.overhead_factor()


def avg_user_rate(ctx: RateContext, params: SystemParams) -> float:
    """Achievable average rate per user (bit/s)."""

    p = params.per_antenna_power
    sinr = p * (ctx.antennas / ctx.users) * (ctx.antennas - ctx.users) / ctx.denominator(params)
    return rate_prefactor(params) * math.log2(1.0 + sinr)


def sinr_single_antenna(ctx: RateContext, params: SystemParams) -> float:
    """SINR a user would see if the BS used a single antenna, ``gamma_{c,1}``."""

    return (params.per_antenna_power / ctx.users) / ctx.denominator(params)


def rate_from_single_antenna_sinr(gamma: float, users: int, antennas: float, params: SystemParams) -> float:
    """Same rate written through ``gamma``: ``beta * ln(1 - nM*gamma + gamma*M^2) / ln 2``."""

    return rate_prefactor(params) * math.log(1.0 - users * antennas * gamma + gamma * antennas**2) / math.log(2.0)


def rate_vector(
    users: np.ndarray,
    antennas: np.ndarray,
    interference: np.ndarray | float,
    own_gain: float,
    params: SystemParams,
) -> np.ndarray:
    """Vectorised ``avg_user_rate`` over broadcastable arrays (``users`` >= 1)."""

    users = np.asarray(users, dtype=float)
    antennas = np.asarray(antennas, dtype=float)
    denominator = params.noise_power * own_gain + np.asarray(interference, dtype=float)
    sinr = params.per_antenna_power * (antennas / users) * (antennas - users) / denominator
    return rate_prefactor(params) * np.log2(1.0 + sinr)


@dataclass(slots=True, frozen=True)
class OracleEstimate:
    """Monte-Carlo ergodic-rate estimate (bit/s) with its standard error."""

    rate: float
    std_error: float
    trials: int

    def to_dict(self) -> dict[str, float | int]:
        return {"rate": self.rate, "std_error": self.std_error, "trials": self.trials}


def _complex_gaussian(rng: np.random.Generator, shape: tuple[int, ...], variance: float) -> np.ndarray:
    scale = math.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def _zf_precoders(rng: np.random.Generator, trials: int, users: int, antennas: int, variance: float):
    """Draw channels ``H`` (trials x users x antennas) and unit-norm ZF columns."""

    while True:
        channel = _complex_gaussian(rng, (trials, users, antennas), variance)
        gram = channel @ np.conj(np.swapaxes(channel, 1, 2))
        try:
            gram_inv = np.linalg.inv(gram)
        except np.linalg.LinAlgError:
            logger.debug("Sorteio de canal singular; sorteando novamente")
            continue
        precoder = np.conj(np.swapaxes(channel, 1, 2)) @ gram_inv
        precoder /= np.linalg.norm(precoder, axis=1, keepdims=True)
        return channel, precoder


def monte_carlo_rate_oracle(
    users: int,
    antennas: int,
    interferer_antennas: Sequence[int],
    own_variance: float,
    cross_variances: Sequence[float],
    params: SystemParams,
    *,
    trials: int = 100_000,
    seed: int = 0,
    interferer_users: Sequence[int] | None = None,
) -> OracleEstimate:
    """Estimate the ergodic ZF rate of a tagged user by simulation.

    The tagged user has channel variance ``own_variance`` to its BS and
    ``cross_variances[d]`` to interferer ``d``. Each interferer serves
    ``interferer_users[d]`` users (default ``users``) with ZF and equal power
    ``p * M_d / K_d``. The closed-form counterpart is :func:`avg_user_rate`
    with ``G_cc = 1/own_variance`` and ``G_cd = cross_variances[d]/own_variance``.
    """

    if antennas < users + 1:
        raise ValueError("the oracle needs M >= n + 1")
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if len(interferer_antennas) != len(cross_variances):
        raise ValueError("one channel variance is needed per interferer")
    if interferer_users is None:
        interferer_users = [users] * len(interferer_antennas)

    rng = np.random.default_rng(seed)
    p = params.per_antenna_power
    samples: list[np.ndarray] = []

    remaining = trials
    while remaining > 0:
        batch = min(remaining, _ORACLE_CHUNK)
        channel, precoder = _zf_precoders(rng, batch, users, antennas, own_variance)
        # Tagged user is index 0; ZF nulls the other intra-cell streams.
        gain = np.abs(np.einsum("tm,tm->t", channel[:, 0, :], precoder[:, :, 0])) ** 2
        signal = p * antennas / users * gain

        interference = np.zeros(batch)
        for m_d, k_d, variance in zip(interferer_antennas, interferer_users, cross_variances):
            _, w_d = _zf_precoders(rng, batch, k_d, m_d, 1.0)
            h = _complex_gaussian(rng, (batch, m_d), variance)
            leakage = np.abs(np.einsum("tm,tmk->tk", h, w_d)) ** 2
            interference += p * m_d / k_d * leakage.sum(axis=1)

        samples.append(np.log2(1.0 + signal / (params.noise_power + interference)))
        remaining -= batch

    values = rate_prefactor(params) * np.concatenate(samples)
    std_error = float(values.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return OracleEstimate(rate=float(values.mean()), std_error=std_error, trials=trials)


__all__ = [
    "OracleEstimate",
    "RateContext",
    "avg_user_rate",
    "monte_carlo_rate_oracle",
    "rate_from_single_antenna_sinr",
    "rate_prefactor",
    "rate_vector",
    "sinr_single_antenna",
]

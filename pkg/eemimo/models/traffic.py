"""Daily load profiles and the state-dependent M/G/m/m user queue.

Users arrive as a Poisson process of rate ``lambda`` and each brings ``s``
bits. With ``n`` users in the cell every user is served at ``R(n)``, so the
steady-state probabilities are

    pi(n) = pi(0) * prod_{i=1..n} lambda * s / (i * R(i))

which is evaluated in the log domain. Blocking is ``pi(m)`` (PASTA).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from os import PathLike
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd
from scipy.optimize import bisect
from scipy.special import logsumexp

logger = logging.getLogger(__name__)

PROFILE_COLUMNS = ("interval", "load_fraction")
MIN_LOAD_FRACTION = 0.10
DEFAULT_TARGET_BLOCKING = 0.02
DEFAULT_TRAFFIC_BITS = 1e8


class ProfileError(ValueError):
    """Malformed daily load profile file."""

    def __init__(self, message: str, *, path: Path | None = None, line: int | None = None) -> None:
        location = ""
        if path is not None:
            location = f"{path}"
            if line is not None:
                location += f":{line}"
            location += ": "
        super().__init__(location + message)
        self.path = path
        self.line = line


class QueueError(ValueError):
    """Queue parameters that make the steady state ill-defined."""


@dataclass(slots=True, frozen=True)
class LoadProfile:
    """Fraction of the peak arrival rate in each time interval of the day."""

    intervals: tuple[int, ...]
    fractions: tuple[float, ...]
    label: str = ""

    def __post_init__(self) -> None:
        if len(self.intervals) != len(self.fractions):
            raise ValueError("intervals and fractions must have the same length")
        for value in self.fractions:
            if not 0.0 < value <= 1.0:
                raise ValueError(f"load fraction {value} outside (0, 1]")

    @property
    def num_intervals(self) -> int:
        return len(self.fractions)

    @property
    def peak(self) -> float:
        return max(self.fractions) if self.fractions else 0.0

    def fraction(self, h: int) -> float:
        if not 0 <= h < self.num_intervals:
            raise IndexError(f"interval {h} outside profile of {self.num_intervals} intervals")
        return self.fractions[h]

    def effective_fraction(self, h: int, floor: float = MIN_LOAD_FRACTION) -> float:
        return max(self.fraction(h), floor)

    @classmethod
    def constant(cls, value: float, num_intervals: int, label: str = "constant") -> LoadProfile:
        return cls(tuple(range(num_intervals)), tuple([float(value)] * num_intervals), label)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"interval": list(self.intervals), "load_fraction": list(self.fractions)})


def load_profile(path: Path | str | PathLike[str], label: str | None = None) -> LoadProfile:
    """Read a ``interval,load_fraction`` CSV into a :class:`LoadProfile`.

    Line numbers in errors count the header as line 1.
    """

    source = Path(path)
    try:
        frame = pd.read_csv(source, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError as exc:
        raise ProfileError("empty profile file", path=source) from exc
    except pd.errors.ParserError as exc:
        raise ProfileError(f"malformed CSV: {exc}", path=source) from exc

    columns = tuple(str(column).strip() for column in frame.columns)
    if columns != PROFILE_COLUMNS:
        raise ProfileError(
            f"header must be {','.join(PROFILE_COLUMNS)!r} (got {','.join(columns)!r})",
            path=source,
            line=1,
        )
    if frame.empty:
        raise ProfileError("profile has no intervals", path=source, line=2)

    intervals: list[int] = []
    fractions: list[float] = []
    for offset, (raw_interval, raw_fraction) in enumerate(frame.itertuples(index=False, name=None)):
        line = offset + 2
        interval = pd.to_numeric(str(raw_interval).strip(), errors="coerce")
        fraction = pd.to_numeric(str(raw_fraction).strip(), errors="coerce")
        if pd.isna(interval) or float(interval) != int(interval):
            raise ProfileError(f"invalid interval index {raw_interval!r}", path=source, line=line)
        if pd.isna(fraction) or not math.isfinite(float(fraction)):
            raise ProfileError(f"invalid load fraction {raw_fraction!r}", path=source, line=line)
        if not 0.0 < float(fraction) <= 1.0:
            raise ProfileError(f"load fraction {float(fraction)} outside (0, 1]", path=source, line=line)
        if intervals and int(interval) <= intervals[-1]:
            raise ProfileError("interval indices must be strictly increasing", path=source, line=line)
        intervals.append(int(interval))
        fractions.append(float(fraction))

    profile = LoadProfile(tuple(intervals), tuple(fractions), label or source.stem)
    if profile.peak < 1.0:
        logger.warning("Perfil %s tem pico %.3f abaixo de 1.0", source, profile.peak)
    logger.info("Perfil de carga %s carregado com %s intervalos", profile.label, profile.num_intervals)
    return profile


@dataclass(slots=True, frozen=True, eq=False)
class QueueModel:
    """State-dependent loss queue with ``m`` servers.

    ``rates[i]`` is the per-user rate ``R(i + 1)`` in bit/s.
    """

    m: int
    traffic_bits: float
    rates: np.ndarray
    arrival_rate: float = 0.0

    def __post_init__(self) -> None:
        rates = np.asarray(self.rates, dtype=float)
        if self.m < 1:
            raise QueueError("the queue needs at least one server")
        if rates.shape != (self.m,):
            raise QueueError(f"expected {self.m} per-state rates, got shape {rates.shape}")
        if not np.all(np.isfinite(rates)) or np.any(rates <= 0.0):
            raise QueueError("per-user rates must be positive and finite in every state")
        if self.traffic_bits <= 0.0:
            raise QueueError("traffic_bits must be positive")
        if not math.isfinite(self.arrival_rate) or self.arrival_rate < 0.0:
            raise QueueError("arrival_rate must be finite and non-negative")
        object.__setattr__(self, "rates", rates)

    def f(self, n: int) -> float:
        """Rate scaling ``R(n) / R(1)``."""

        return float(self.rates[n - 1] / self.rates[0])

    def with_arrival_rate(self, arrival_rate: float) -> QueueModel:
        return replace(self, arrival_rate=float(arrival_rate))


@dataclass(slots=True, frozen=True, eq=False)
class StateDistribution:
    """Steady-state probabilities ``pi(0..m)``."""

    pi: np.ndarray

    @property
    def m(self) -> int:
        return int(self.pi.shape[0]) - 1

    @property
    def blocking(self) -> float:
        return float(self.pi[-1])

    @property
    def idle(self) -> float:
        return float(self.pi[0])

    @property
    def activity(self) -> float:
        return 1.0 - float(self.pi[0])

    def mean_occupancy(self) -> float:
        return float(np.dot(np.arange(self.pi.shape[0]), self.pi))

    @classmethod
    def point_mass(cls, m: int, state: int) -> StateDistribution:
        pi = np.zeros(m + 1)
        pi[state] = 1.0
        pi.setflags(write=False)
        return cls(pi)


def steady_state(q: QueueModel) -> StateDistribution:
    if q.arrival_rate == 0.0:
        return StateDistribution.point_mass(q.m, 0)

    states = np.arange(1, q.m + 1, dtype=float)
    log_terms = math.log(q.arrival_rate * q.traffic_bits) - np.log(states) - np.log(q.rates)
    log_weights = np.concatenate(([0.0], np.cumsum(log_terms)))
    if not np.all(np.isfinite(log_weights)):
        raise QueueError("non-finite steady-state weights")

    pi = np.exp(log_weights - logsumexp(log_weights))
    pi /= pi.sum()
    pi.setflags(write=False)
    return StateDistribution(pi)


def blocking_probability(q: QueueModel, arrival_rate: float) -> float:
    return steady_state(q.with_arrival_rate(arrival_rate)).blocking


def calibrate_lambda_max(
    q_template: QueueModel,
    target_blocking: float = DEFAULT_TARGET_BLOCKING,
    *,
    tolerance: float = 1e-8,
) -> float:
    """Largest arrival rate whose blocking probability equals ``target_blocking``."""

    if not 0.0 < target_blocking < 1.0:
        raise ValueError("target blocking must lie in (0, 1)")

    upper = float(q_template.rates[0] / q_template.traffic_bits)
    doublings = 0
    while blocking_probability(q_template, upper) <= target_blocking:
        upper *= 2.0
        doublings += 1
        if doublings > 2000:
            raise AssertionError("blocking target unreachable")

    def excess(arrival_rate: float) -> float:
        return blocking_probability(q_template, arrival_rate) - target_blocking

    lambda_max = bisect(excess, 0.0, upper, xtol=upper * 1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    achieved = blocking_probability(q_template, lambda_max)
    if abs(achieved - target_blocking) > tolerance:
        raise AssertionError(f"bisection stopped at blocking {achieved:.3e}")

    logger.info("lambda_max calibrado: %.6e chegadas/s (bloqueio %.6f)", lambda_max, achieved)
    return float(lambda_max)


def interval_distribution(
    profile: LoadProfile,
    h: int,
    lambda_max: float,
    q_template: QueueModel,
    *,
    floor: float = MIN_LOAD_FRACTION,
) -> StateDistribution:
    """Steady state of interval ``h`` at ``lambda = max(x_h, floor) * lambda_max``."""

    return steady_state(q_template.with_arrival_rate(profile.effective_fraction(h, floor) * lambda_max))


def erlang_b(offered_load: float, servers: int) -> float:
    """Erlang-B blocking by the standard recursion."""

    blocking = 1.0
    for k in range(1, servers + 1):
        blocking = offered_load * blocking / (k + offered_load * blocking)
    return blocking


def erlang_distribution(offered_load: float, servers: int) -> np.ndarray:
    """Truncated Poisson distribution of an Erlang loss system."""

    weights = [1.0]
    for k in range(1, servers + 1):
        weights.append(weights[-1] * offered_load / k)
    values = np.asarray(weights)
    return values / values.sum()


def constant_rate_queue(m: int, rate: float, traffic_bits: float = DEFAULT_TRAFFIC_BITS) -> QueueModel:
    return QueueModel(m=m, traffic_bits=traffic_bits, rates=np.full(m, float(rate)))


def queue_from_rates(rates: Sequence[float] | np.ndarray, traffic_bits: float = DEFAULT_TRAFFIC_BITS) -> QueueModel:
    values = np.asarray(rates, dtype=float)
    return QueueModel(m=int(values.shape[0]), traffic_bits=traffic_bits, rates=values)


__all__ = [
    "DEFAULT_TARGET_BLOCKING",
    "DEFAULT_TRAFFIC_BITS",
    "LoadProfile",
    "MIN_LOAD_FRACTION",
    "ProfileError",
    "QueueError",
    "QueueModel",
    "StateDistribution",
    "blocking_probability",
    "calibrate_lambda_max",
    "constant_rate_queue",
    "erlang_b",
    "erlang_distribution",
    "interval_distribution",
    "load_profile",
    "queue_from_rates",
    "steady_state",
]

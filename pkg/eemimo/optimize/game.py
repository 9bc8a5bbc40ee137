"""Antenna-adaptation game between base stations.

Every cell picks, for each number of served users ``n``, the antenna count
``M_c(n)`` that maximises its energy efficiency given the average interference
created by the other cells. Cells update in turn (Gauss-Seidel, ascending
index) until a full sweep changes nothing.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from ..models.params import SystemParams
from ..models.power import baseband_coefficients, pa_coefficient
from ..models.rate import rate_vector
from ..models.traffic import StateDistribution
from ..network.geometry import CouplingGains

logger = logging.getLogger(__name__)

DEFAULT_MAX_SWEEPS = 1000
EXHAUSTIVE_LIMIT = 512
NASH_TOLERANCE = 1e-12
METHODS = ("auto", "exhaustive", "stationary")


class GameConvergenceError(RuntimeError):
    """Best-response iteration did not settle on a Nash equilibrium."""

    def __init__(self, message: str, *, interval: int | None = None, sweeps: int = 0) -> None:
        prefix = f"interval {interval}: " if interval is not None else ""
        super().__init__(prefix + message)
        self.interval = interval
        self.sweeps = sweeps


@dataclass(slots=True, frozen=True, eq=False)
class AntennaPolicy:
    """Antenna counts ``antennas[c, n]`` for every cell and user state (``n = 0..K_max``)."""

    antennas: np.ndarray

    def __post_init__(self) -> None:
        values = np.array(self.antennas, dtype=np.int64)
        if values.ndim != 2 or values.shape[1] < 2:
            raise ValueError("antennas must be a (cells, K_max + 1) integer array")
        if np.any(values[:, 0] != 0):
            raise ValueError("M_c(0) must be 0")
        values.setflags(write=False)
        object.__setattr__(self, "antennas", values)

    @property
    def num_cells(self) -> int:
        return int(self.antennas.shape[0])

    @property
    def k_max(self) -> int:
        return int(self.antennas.shape[1]) - 1

    @classmethod
    def full(cls, num_cells: int, k_max: int, m_max: int) -> AntennaPolicy:
        values = np.full((num_cells, k_max + 1), m_max, dtype=np.int64)
        values[:, 0] = 0
        return cls(values)

    def validate(self, m_max: int) -> None:
        users = np.arange(1, self.k_max + 1)
        active = self.antennas[:, 1:]
        if np.any(active < users + 1) or np.any(active > m_max):
            raise ValueError(f"policy outside n + 1 <= M(n) <= {m_max}")

    def cell(self, c: int) -> np.ndarray:
        return self.antennas[c]

    def mean_antennas(self, distributions: Sequence[StateDistribution]) -> np.ndarray:
        pis = _stack_distributions(distributions, self.num_cells, self.k_max)
        return np.einsum("cn,cn->c", self.antennas.astype(float), pis)

    def to_dict(self) -> dict[str, Any]:
        return {"antennas": self.antennas.tolist()}


@dataclass(slots=True, frozen=True)
class SweepRecord:
    sweep: int
    maxtol: int
    changed: tuple[int, ...]
    antennas: np.ndarray = field(repr=False, compare=False)

    def to_dict(self) -> dict[str, Any]:
        return {"sweep": self.sweep, "maxtol": self.maxtol, "changed": list(self.changed)}


@dataclass(slots=True, frozen=True, eq=False)
class GameState:
    """Converged policies with the interference and rates they produce."""

    policy: AntennaPolicy
    distributions: tuple[StateDistribution, ...]
    interference: np.ndarray
    rates: np.ndarray
    trace: tuple[SweepRecord, ...]

    @property
    def sweeps(self) -> int:
        return len(self.trace)

    @property
    def maxtol_series(self) -> list[int]:
        return [record.maxtol for record in self.trace]

    def to_dict(self) -> dict[str, Any]:
        return {
            "antennas": self.policy.antennas.tolist(),
            "interference_w": self.interference.tolist(),
            "maxtol": self.maxtol_series,
        }


def _stack_distributions(distributions: Sequence[StateDistribution], num_cells: int, k_max: int) -> np.ndarray:
    if len(distributions) != num_cells:
        raise ValueError(f"expected {num_cells} distributions, got {len(distributions)}")
    pis = np.stack([np.asarray(dist.pi, dtype=float) for dist in distributions])
    if pis.shape[1] != k_max + 1:
        raise ValueError(f"distributions must cover states 0..{k_max}")
    return pis


def effective_interference(
    c: int,
    policy: AntennaPolicy,
    distributions: Sequence[StateDistribution],
    gains: CouplingGains,
    p: float,
) -> float:
    """``I_c = sum_{d != c} G_cd * p * sum_n M_d(n) pi_d(n)``."""

    mean_antennas = policy.mean_antennas(distributions)
    row = np.array(gains.g_cross[c], dtype=float)
    row[c] = 0.0
    return float(p * np.dot(row, mean_antennas))


def interference_vector(
    policy: AntennaPolicy,
    distributions: Sequence[StateDistribution],
    gains: CouplingGains,
    p: float,
) -> np.ndarray:
    mean_antennas = policy.mean_antennas(distributions)
    cross = np.array(gains.g_cross, dtype=float)
    np.fill_diagonal(cross, 0.0)
    return p * cross @ mean_antennas


def state_objective(
    users: np.ndarray | int,
    antennas: np.ndarray | float,
    interference: float,
    own_gain: float,
    params: SystemParams,
    *,
    include_rate_term: bool = False,
) -> np.ndarray:
    """EE of one user state, ``n R(n, M) / P(n, M)``.

    Without the rate term the denominator is the affine ``C0' + C1 M``.
    """

    users = np.asarray(users, dtype=float)
    antennas = np.asarray(antennas, dtype=float)
    rates = rate_vector(users, antennas, interference, own_gain, params)
    c0_bb, c1_bb = baseband_coefficients(users, params)
    power = c0_bb + params.p_oth + (c1_bb + pa_coefficient(params)) * antennas
    if include_rate_term:
        power = power + params.coding_coefficient * users * rates
    return users * rates / power


def _check_range(users: int, m_max: int) -> None:
    if users < 1:
        raise ValueError("best response needs at least one user")
    if users + 1 > m_max:
        raise ValueError(f"empty antenna range: n + 1 = {users + 1} > M_max = {m_max}")


def _exhaustive(users: int, interference: float, own_gain: float, params: SystemParams, m_max: int, include_rate_term: bool) -> int:
    candidates = np.arange(users + 1, m_max + 1)
    values = state_objective(users, candidates, interference, own_gain, params, include_rate_term=include_rate_term)
    return int(candidates[int(np.argmax(values))])


def _stationary(users: int, interference: float, own_gain: float, params: SystemParams, m_max: int) -> int:
    gamma = (params.per_antenna_power / users) / (params.noise_power * own_gain + interference)
    c0_bb, c1_bb = baseband_coefficients(users, params)
    c0 = c0_bb + params.p_oth
    c1 = c1_bb + pa_coefficient(params)

    def slope(m: float) -> float:
        z = 1.0 + gamma * m * (m - users)
        return gamma * (2.0 * m - users) / z * (c0 + c1 * m) - np.log(z) * c1

    lower, upper = float(users + 1), float(m_max)
    candidates = {users + 1, m_max}
    if slope(lower) > 0.0 and slope(upper) < 0.0:
        root = brentq(slope, lower, upper, xtol=1e-9)
        candidates.update({int(np.floor(root)), int(np.ceil(root))})
    ordered = np.array(sorted(m for m in candidates if users + 1 <= m <= m_max))
    values = state_objective(users, ordered, interference, own_gain, params)
    return int(ordered[int(np.argmax(values))])


def _resolve_method(method: str, m_max: int) -> str:
    if method not in METHODS:
        raise ValueError(f"unknown best-response method {method!r}")
    if method == "auto":
        return "exhaustive" if m_max <= EXHAUSTIVE_LIMIT else "stationary"
    return method


def best_response_state(
    users: int,
    interference: float,
    own_gain: float,
    params: SystemParams,
    m_max: int,
    *,
    method: str = "auto",
    include_rate_term: bool = False,
) -> int:
    """Antenna count in ``[n + 1, M_max]`` maximising the state EE; ties go to fewer antennas."""

    _check_range(users, m_max)
    if include_rate_term or _resolve_method(method, m_max) == "exhaustive":
        return _exhaustive(users, interference, own_gain, params, m_max, include_rate_term)
    return _stationary(users, interference, own_gain, params, m_max)


def best_response_vector(
    interference: float,
    own_gain: float,
    params: SystemParams,
    m_max: int,
    *,
    method: str = "auto",
) -> np.ndarray:
    """Best response for every state ``n = 0..K_max`` at a fixed interference."""

    k_max = params.k_max
    _check_range(k_max, m_max)
    response = np.zeros(k_max + 1, dtype=np.int64)
    if _resolve_method(method, m_max) == "stationary":
        for users in range(1, k_max + 1):
            response[users] = _stationary(users, interference, own_gain, params, m_max)
        return response

    users = np.arange(1, k_max + 1)[:, None]
    antennas = np.arange(1, m_max + 1)[None, :]
    feasible = antennas >= users + 1
    values = state_objective(users, np.where(feasible, antennas, users + 1), interference, own_gain, params)
    values = np.where(feasible, values, -np.inf)
    response[1:] = antennas[0, np.argmax(values, axis=1)]
    return response


def best_response_cell(
    c: int,
    policy: AntennaPolicy,
    distributions: Sequence[StateDistribution],
    gains: CouplingGains,
    params: SystemParams,
    m_max: int,
    *,
    method: str = "auto",
) -> np.ndarray:
    interference = effective_interference(c, policy, distributions, gains, params.per_antenna_power)
    return best_response_vector(interference, float(gains.g_own[c]), params, m_max, method=method)


def state_rates(policy: AntennaPolicy, interference: np.ndarray, gains: CouplingGains, params: SystemParams) -> np.ndarray:
    """Per-user rates ``R_c(n)`` under ``policy``; column 0 is zero."""

    users = np.arange(1, policy.k_max + 1)[None, :]
    rates = np.zeros(policy.antennas.shape, dtype=float)
    rates[:, 1:] = rate_vector(
        users,
        policy.antennas[:, 1:],
        np.asarray(interference, dtype=float)[:, None],
        np.asarray(gains.g_own, dtype=float)[:, None],
        params,
    )
    return rates


def run_game(
    gains: CouplingGains,
    params: SystemParams,
    distributions: Sequence[StateDistribution],
    m_max: int,
    *,
    initial: AntennaPolicy | None = None,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
    method: str = "auto",
    interval: int | None = None,
    verify: bool = True,
) -> GameState:
    """Best-response iteration from ``initial`` (all ``M_max`` by default) to a Nash equilibrium."""

    num_cells = gains.num_cells
    k_max = params.k_max
    policy = initial if initial is not None else AntennaPolicy.full(num_cells, k_max, m_max)
    if policy.num_cells != num_cells or policy.k_max != k_max:
        raise ValueError("initial policy does not match the network and K_max")
    policy.validate(m_max)
    distributions = tuple(distributions)
    pis = _stack_distributions(distributions, num_cells, k_max)

    p = params.per_antenna_power
    cross = np.array(gains.g_cross, dtype=float)
    np.fill_diagonal(cross, 0.0)
    antennas = np.array(policy.antennas)
    mean_antennas = np.einsum("cn,cn->c", antennas.astype(float), pis)

    trace: list[SweepRecord] = []
    for sweep in range(1, max_sweeps + 1):
        changed = []
        for c in range(num_cells):
            interference = float(p * np.dot(cross[c], mean_antennas))
            response = best_response_vector(interference, float(gains.g_own[c]), params, m_max, method=method)
            changed.append(int(np.count_nonzero(response != antennas[c])))
            antennas[c] = response
            mean_antennas[c] = float(np.dot(response, pis[c]))
        maxtol = max(changed)
        trace.append(SweepRecord(sweep=sweep, maxtol=maxtol, changed=tuple(changed), antennas=antennas.copy()))
        logger.debug("Varredura %s: maxtol=%s", sweep, maxtol)
        if maxtol == 0:
            break
    else:
        raise GameConvergenceError(
            f"no equilibrium after {max_sweeps} sweeps", interval=interval, sweeps=max_sweeps
        )

    final = AntennaPolicy(antennas)
    interference = interference_vector(final, distributions, gains, p)
    if verify:
        for c in range(num_cells):
            response = best_response_vector(float(interference[c]), float(gains.g_own[c]), params, m_max, method=method)
            states = np.flatnonzero(response != final.antennas[c])
            if states.size == 0:
                continue
            kept = state_objective(states, final.antennas[c, states], float(interference[c]), float(gains.g_own[c]), params)
            best = state_objective(states, response[states], float(interference[c]), float(gains.g_own[c]), params)
            if np.any(best > kept * (1.0 + NASH_TOLERANCE)):
                raise GameConvergenceError(
                    f"cell {c} still has a profitable deviation", interval=interval, sweeps=len(trace)
                )

    logger.debug("Equilíbrio atingido em %s varreduras", len(trace))
    return GameState(
        policy=final,
        distributions=distributions,
        interference=interference,
        rates=state_rates(final, interference, gains, params),
        trace=tuple(trace),
    )


def nash_gap(state: GameState, gains: CouplingGains, params: SystemParams, m_max: int) -> float:
    """Largest relative EE improvement any cell could get in any state by deviating."""

    worst = 0.0
    for c in range(state.policy.num_cells):
        own_gain = float(gains.g_own[c])
        interference = float(state.interference[c])
        for users in range(1, state.policy.k_max + 1):
            candidates = np.arange(users + 1, m_max + 1)
            values = state_objective(users, candidates, interference, own_gain, params)
            current = float(state_objective(users, state.policy.antennas[c, users], interference, own_gain, params))
            worst = max(worst, (float(values.max()) - current) / current)
    return worst


@dataclass(slots=True, frozen=True)
class IncreasingDifferences:
    holds: bool
    margin: float


def increasing_differences_check(
    users: int,
    own_antennas: Sequence[int] | np.ndarray,
    opponent_antennas: Sequence[float] | np.ndarray,
    interference: Callable[[np.ndarray], np.ndarray],
    own_gain: float,
    params: SystemParams,
    *,
    tolerance: float = 1e-9,
) -> IncreasingDifferences:
    """Check ``F(x', y') - F(x, y') >= F(x', y) - F(x, y)`` on a grid.

    ``F = log(rate) - log(power)``; ``x`` is the cell's own antenna count and
    ``y`` the opponents' (mean) antennas mapped to Watt by ``interference``.
    Pairs with ``x' = x`` or ``y' = y`` are included, so the margin is at most 0.
    """

    x = np.unique(np.asarray(own_antennas, dtype=float))
    y = np.unique(np.asarray(opponent_antennas, dtype=float))
    if x.size == 0 or y.size == 0:
        raise ValueError("empty grid")
    if x[0] <= users:
        raise ValueError("own antennas must exceed the number of users")
    if y[0] < 0.0:
        raise ValueError("opponent antennas must be non-negative")

    watts = np.asarray(interference(y), dtype=float)
    rates = rate_vector(users, x[:, None], watts[None, :], own_gain, params)
    c0_bb, c1_bb = baseband_coefficients(users, params)
    power = c0_bb + params.p_oth + (c1_bb + pa_coefficient(params)) * x
    objective = np.log(rates) - np.log(power)[:, None]

    margin = 0.0
    upper = np.triu(np.ones((y.size, y.size), dtype=bool))
    for i in range(x.size):
        gain_in_x = objective[i:, :] - objective[i, :]
        pairwise = gain_in_x[:, None, :] - gain_in_x[:, :, None]
        margin = min(margin, float(pairwise[:, upper].min()))
    return IncreasingDifferences(holds=margin >= -tolerance, margin=margin)


__all__ = [
    "AntennaPolicy",
    "DEFAULT_MAX_SWEEPS",
    "GameConvergenceError",
    "GameState",
    "IncreasingDifferences",
    "SweepRecord",
    "best_response_cell",
    "best_response_state",
    "best_response_vector",
    "effective_interference",
    "increasing_differences_check",
    "interference_vector",
    "nash_gap",
    "run_game",
    "state_objective",
    "state_rates",
]

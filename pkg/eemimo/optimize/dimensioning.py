"""Reference-system dimensioning and its off-peak activity fixed point.

The reference network serves every non-empty state with the same ``M_max``
antennas. At peak every BS is active all the time and the design
``(K_max, M_max, p)`` maximising the symmetric-network EE is found by an
exhaustive ``(K, M)`` sweep with a bounded search over ``p`` for each pair.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, replace
from os import PathLike
from pathlib import Path
from typing import Any

import numpy as np

from ..models.efficiency import IntervalMetrics, interval_metrics
from ..models.params import PaKind, PaModel, SystemParams
from ..models.power import Accounting, baseband_coefficients, pa_input_power_array
from ..models.rate import rate_vector
from ..models.traffic import (
    DEFAULT_TARGET_BLOCKING,
    DEFAULT_TRAFFIC_BITS,
    MIN_LOAD_FRACTION,
    QueueModel,
    StateDistribution,
    calibrate_lambda_max,
    steady_state,
)
from ..network.geometry import CouplingGains
from .search import golden_section_max

logger = logging.getLogger(__name__)

DEFAULT_K_CAP = 256
DEFAULT_M_CAP = 512
DEFAULT_P_MIN = 1e-4
DEFAULT_P_MAX = 2.0
DEFAULT_GRID_POINTS = 1024
DEFAULT_P_TOLERANCE = 1e-6


class FixedPointError(RuntimeError):
    """Activity iteration of the reference system did not converge."""


@dataclass(slots=True, frozen=True)
class ReferenceDesign:
    k_max: int
    m_max: int
    p_opt: float
    peak_ee: float
    pa_kind: PaKind
    cell_radius: float | None = None
    peak_rate: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "pa_kind", PaKind.parse(self.pa_kind))
        if not 1 <= self.k_max < self.m_max:
            raise ValueError("a design needs 1 <= K_max < M_max")
        if self.p_opt <= 0.0 or self.peak_ee <= 0.0:
            raise ValueError("p_opt and peak_ee must be positive")

    def apply(self, params: SystemParams) -> SystemParams:
        """``params`` operated at this design's ``K_max`` and ``p``."""

        return params.with_design(k_max=self.k_max, per_antenna_power=self.p_opt)

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["pa_kind"] = self.pa_kind.value
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ReferenceDesign:
        return cls(**data)


@dataclass(slots=True, frozen=True, eq=False)
class ActivitySolution:
    """Converged reference operating point at one load fraction."""

    activity: float
    reference_ee: float
    reference_rate: float
    interference: float
    distribution: StateDistribution
    rates: np.ndarray
    metrics: IntervalMetrics
    iterations: int


@dataclass(slots=True, frozen=True)
class SearchSettings:
    k_cap: int = DEFAULT_K_CAP
    m_cap: int = DEFAULT_M_CAP
    p_min: float = DEFAULT_P_MIN
    p_max: float = DEFAULT_P_MAX
    grid_points: int = DEFAULT_GRID_POINTS
    p_tolerance: float = DEFAULT_P_TOLERANCE

    def __post_init__(self) -> None:
        if self.k_cap < 1 or self.m_cap < 2:
            raise ValueError("search caps must allow at least K = 1 and M = 2")
        if not 0.0 < self.p_min < self.p_max:
            raise ValueError("power bounds must satisfy 0 < p_min < p_max")
        if self.grid_points < 3:
            raise ValueError("grid_points must be at least 3")


def design_ee(
    antennas: np.ndarray,
    users: int,
    p: np.ndarray,
    *,
    own_gain: float,
    interference: float,
    interference_slope: np.ndarray | float,
    params: SystemParams,
) -> np.ndarray:
    """Full-model EE ``K R / P`` with ``I = interference + interference_slope * p``."""

    antennas = np.asarray(antennas, dtype=float)
    p = np.asarray(p, dtype=float)
    denominator = params.noise_power * own_gain + interference + interference_slope * p
    sinr = p * (antennas / users) * (antennas - users) / denominator
    rate = params.bandwidth * params.overhead_factor(users) * np.log2(1.0 + sinr)
    c0_bb, c1_bb = baseband_coefficients(users, params)
    power = (
        c0_bb
        + params.p_oth
        + (c1_bb + pa_input_power_array(p, params.pa)) * antennas
        + params.coding_coefficient * users * rate
    )
    return users * rate / power


def _power_bounds(params: SystemParams, search: SearchSettings) -> tuple[float, float]:
    upper = min(search.p_max, params.pa.transmit_limit())
    if upper <= search.p_min:
        raise ValueError("empty per-antenna power range")
    return search.p_min, upper


def _optimize_p_vector(
    antennas: np.ndarray,
    users: int,
    *,
    own_gain: float,
    interference: float,
    interference_slope: np.ndarray | float,
    params: SystemParams,
    search: SearchSettings,
) -> tuple[np.ndarray, np.ndarray]:
    antennas = np.asarray(antennas, dtype=float)
    lower, upper = _power_bounds(params, search)
    slope = np.broadcast_to(np.asarray(interference_slope, dtype=float), antennas.shape)

    def objective(p: np.ndarray) -> np.ndarray:
        return design_ee(
            antennas, users, p, own_gain=own_gain, interference=interference, interference_slope=slope, params=params
        )

    if params.pa.kind is PaKind.ETPA:
        lo = np.full(antennas.shape, lower)
        hi = np.full(antennas.shape, upper)
    else:
        grid = np.geomspace(lower, upper, search.grid_points)
        values = design_ee(
            antennas[..., None],
            users,
            grid,
            own_gain=own_gain,
            interference=interference,
            interference_slope=slope[..., None],
            params=params,
        )
        best = np.argmax(values, axis=-1)
        lo = grid[np.maximum(best - 1, 0)]
        hi = grid[np.minimum(best + 1, grid.size - 1)]

    return golden_section_max(objective, lo, hi, tolerance=search.p_tolerance)


def optimize_p(
    antennas: int,
    users: int,
    *,
    own_gain: float,
    interference: float = 0.0,
    interference_slope: float = 0.0,
    params: SystemParams,
    search: SearchSettings | None = None,
) -> float:
    """Per-antenna power maximising the EE of ``(M, K)``.

    Interference may grow with ``p`` as ``interference + interference_slope * p``
    (the symmetric network has ``slope = M * sum_d G_cd``). ET-PA uses a
    golden-section search over the whole range; TPA refines the best point of
    a logarithmic grid.
    """

    if not antennas > users >= 1:
        raise ValueError("optimize_p needs M > K >= 1")
    p, _ = _optimize_p_vector(
        np.array([antennas]),
        users,
        own_gain=own_gain,
        interference=interference,
        interference_slope=interference_slope,
        params=params,
        search=search or SearchSettings(),
    )
    return float(p[0])


def symmetric_ee(antennas: int, users: int, p: float, gains: CouplingGains, params: SystemParams) -> float:
    """Peak EE of the symmetric network where every cell uses ``(M, K, p)``."""

    value = design_ee(
        np.array([antennas]),
        users,
        np.array([p]),
        own_gain=gains.mean_own(),
        interference=0.0,
        interference_slope=antennas * gains.mean_cross_sum(),
        params=params,
    )
    return float(value[0])


def design_point_ee(
    antennas: int,
    users: int,
    gains: CouplingGains,
    params: SystemParams,
    search: SearchSettings | None = None,
) -> tuple[float, float]:
    """``(p, EE)`` of one ``(M, K)`` pair with its own optimal power."""

    p = optimize_p(
        antennas,
        users,
        own_gain=gains.mean_own(),
        interference_slope=antennas * gains.mean_cross_sum(),
        params=params,
        search=search,
    )
    return p, symmetric_ee(antennas, users, p, gains, params)


def dimension_reference(
    pa: PaModel,
    gains: CouplingGains,
    params: SystemParams,
    *,
    search: SearchSettings | None = None,
    fixed_p: float | None = None,
    cell_radius: float | None = None,
) -> ReferenceDesign:
    """Exhaustive ``(K, M)`` search of the symmetric full-activity network."""

    settings = search or SearchSettings()
    params = replace(params, pa=pa)
    own_gain = gains.mean_own()
    cross_sum = gains.mean_cross_sum()
    if fixed_p is not None:
        lower, upper = _power_bounds(params, settings) if pa.max_output_power is not None else (0.0, np.inf)
        if not lower < fixed_p <= upper:
            raise ValueError(f"fixed_p={fixed_p} outside the feasible power range")

    best: tuple[float, int, int, float] | None = None
    for users in range(1, settings.k_cap + 1):
        if users + 1 > settings.m_cap or params.overhead_factor(users) <= 0.0:
            break
        antennas = np.arange(users + 1, settings.m_cap + 1, dtype=float)
        if fixed_p is None:
            p_values, ee_values = _optimize_p_vector(
                antennas,
                users,
                own_gain=own_gain,
                interference=0.0,
                interference_slope=antennas * cross_sum,
                params=params,
                search=settings,
            )
        else:
            p_values = np.full(antennas.shape, float(fixed_p))
            ee_values = design_ee(
                antennas,
                users,
                p_values,
                own_gain=own_gain,
                interference=0.0,
                interference_slope=antennas * cross_sum,
                params=params,
            )
        index = int(np.argmax(ee_values))
        if best is None or ee_values[index] > best[0]:
            best = (float(ee_values[index]), users, int(antennas[index]), float(p_values[index]))

    if best is None:
        raise ValueError("search caps leave no feasible (K, M) pair")

    peak_ee, k_max, m_max, p_opt = best
    design_params = params.with_design(k_max=k_max, per_antenna_power=p_opt)
    peak_rate = float(
        rate_vector(k_max, m_max, p_opt * m_max * cross_sum, own_gain, design_params)
    )
    design = ReferenceDesign(
        k_max=k_max,
        m_max=m_max,
        p_opt=p_opt,
        peak_ee=peak_ee,
        pa_kind=pa.kind,
        cell_radius=cell_radius,
        peak_rate=peak_rate,
    )
    logger.info(
        "Sistema de referência (%s): K_max=%s, M_max=%s, p=%.4f W, EE=%.4e bit/J",
        pa.kind.value,
        k_max,
        m_max,
        p_opt,
        peak_ee,
    )
    return design


def reference_rates(design: ReferenceDesign, activity: float, gains: CouplingGains, params: SystemParams) -> tuple[np.ndarray, float]:
    """Per-user rates ``R(1..K_max)`` at ``M_max`` and the interference behind them."""

    design_params = design.apply(params)
    interference = activity * design.p_opt * design.m_max * gains.mean_cross_sum()
    users = np.arange(1, design.k_max + 1)
    rates = rate_vector(users, design.m_max, interference, gains.mean_own(), design_params)
    return rates, float(interference)


def reference_queue(
    design: ReferenceDesign,
    gains: CouplingGains,
    params: SystemParams,
    *,
    activity: float = 1.0,
    traffic_bits: float = DEFAULT_TRAFFIC_BITS,
) -> QueueModel:
    rates, _ = reference_rates(design, activity, gains, params)
    return QueueModel(m=design.k_max, traffic_bits=traffic_bits, rates=rates)


def calibrate_reference_lambda(
    design: ReferenceDesign,
    gains: CouplingGains,
    params: SystemParams,
    *,
    traffic_bits: float = DEFAULT_TRAFFIC_BITS,
    target_blocking: float = DEFAULT_TARGET_BLOCKING,
) -> float:
    """``lambda_max`` giving the target blocking in the fully active reference network."""

    queue = reference_queue(design, gains, params, traffic_bits=traffic_bits)
    return calibrate_lambda_max(queue, target_blocking)


def reference_activity_fixed_point(
    design: ReferenceDesign,
    load_fraction: float,
    gains: CouplingGains,
    params: SystemParams,
    *,
    lambda_max: float,
    traffic_bits: float = DEFAULT_TRAFFIC_BITS,
    initial_activity: float = 1.0,
    tolerance: float = 1e-8,
    max_iter: int = 500,
    accounting: Accounting | str = Accounting.IDLE_OFF,
    floor: float = MIN_LOAD_FRACTION,
) -> ActivitySolution:
    """Activity ``a = 1 - pi(0)`` consistent with the interference ``a p M_max sum G_cd``.

    The step towards the new activity is halved each time the update changes
    direction.
    """

    if not 0.0 < load_fraction <= 1.0:
        raise ValueError("load fraction must lie in (0, 1]")
    if not 0.0 <= initial_activity <= 1.0:
        raise ValueError("initial activity must lie in [0, 1]")

    arrival_rate = max(load_fraction, floor) * lambda_max

    def solve(activity: float) -> tuple[StateDistribution, np.ndarray, float]:
        rates, interference = reference_rates(design, activity, gains, params)
        queue = QueueModel(m=design.k_max, traffic_bits=traffic_bits, rates=rates, arrival_rate=arrival_rate)
        return steady_state(queue), rates, interference

    activity = 1.0 if load_fraction >= 1.0 else initial_activity
    step = 1.0
    previous_delta = 0.0
    iterations = 0
    distribution, rates, interference = solve(activity)
    if load_fraction < 1.0:
        for iterations in range(1, max_iter + 1):
            delta = distribution.activity - activity
            if abs(delta) <= tolerance:
                break
            if delta * previous_delta < 0.0:
                step *= 0.5
            previous_delta = delta
            activity = min(1.0, max(0.0, activity + step * delta))
            distribution, rates, interference = solve(activity)
            logger.debug("Ponto fixo de atividade: iteração %s, a=%.10f", iterations, activity)
        else:
            raise FixedPointError(
                f"activity did not converge within {max_iter} iterations (load {load_fraction})"
            )

    full_rates = np.concatenate(([0.0], rates))
    antennas = np.full(design.k_max + 1, design.m_max, dtype=float)
    antennas[0] = 0.0
    metrics = interval_metrics(distribution.pi, antennas, full_rates, design.apply(params), accounting)
    return ActivitySolution(
        activity=activity,
        reference_ee=metrics.ee,
        reference_rate=metrics.mean_rate,
        interference=interference,
        distribution=distribution,
        rates=full_rates,
        metrics=metrics,
        iterations=iterations,
    )


def design_fingerprint(pa: PaModel, gains: CouplingGains, params: SystemParams, search: SearchSettings, fixed_p: float | None, cell_radius: float | None) -> str:
    payload = {
        "params": replace(params, pa=pa).to_dict(),
        "g_own": gains.mean_own(),
        "g_cross_sum": gains.mean_cross_sum(),
        "search": asdict(search),
        "fixed_p": fixed_p,
        "cell_radius": cell_radius,
    }
    return hashlib.sha1(json.dumps(payload, sort_keys=True).encode("utf-8")).hexdigest()


def get_reference_design(
    pa: PaModel,
    gains: CouplingGains,
    params: SystemParams,
    *,
    search: SearchSettings | None = None,
    fixed_p: float | None = None,
    cell_radius: float | None = None,
    cache: Path | str | PathLike[str] | None = None,
    output: Path | str | PathLike[str] | None = None,
) -> ReferenceDesign:
    """Return a reference design, reusing ``cache`` when it was built from the same inputs.

    The design is written with its fingerprint to ``cache`` when it had to be computed and to
    ``output`` in every case, so either file can be passed back as ``cache`` later.
    """

    settings = search or SearchSettings()
    fingerprint = design_fingerprint(pa, gains, params, settings, fixed_p, cell_radius)
    cache_path = None if cache is None else Path(cache)

    if cache_path is not None and cache_path.exists():
        data = json.loads(cache_path.read_text(encoding="utf-8"))
        if data.get("fingerprint") == fingerprint:
            logger.info("Reutilizando dimensionamento em cache: %s", cache_path)
            design = ReferenceDesign.from_dict(data["design"])
            if output is not None:
                save_reference_design(design, fingerprint, output)
            return design
        logger.warning("Cache de dimensionamento %s desatualizado; recalculando", cache_path)

    design = dimension_reference(pa, gains, params, search=settings, fixed_p=fixed_p, cell_radius=cell_radius)
    for target in dict.fromkeys(Path(p) for p in (cache_path, output) if p is not None):
        save_reference_design(design, fingerprint, target)
    return design


def save_reference_design(design: ReferenceDesign, fingerprint: str, path: Path | str | PathLike[str]) -> Path:
    """Write ``design`` in the fingerprinted layout read back by :func:`get_reference_design`."""

    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(
        json.dumps({"fingerprint": fingerprint, "design": design.to_dict()}, indent=2, sort_keys=True),
        encoding="utf-8",
    )
    logger.info("Dimensionamento salvo em %s", target)
    return target


__all__ = [
    "ActivitySolution",
    "FixedPointError",
    "ReferenceDesign",
    "SearchSettings",
    "calibrate_reference_lambda",
    "design_fingerprint",
    "design_ee",
    "design_point_ee",
    "dimension_reference",
    "get_reference_design",
    "optimize_p",
    "reference_activity_fixed_point",
    "save_reference_design",
    "reference_queue",
    "reference_rates",
    "symmetric_ee",
]

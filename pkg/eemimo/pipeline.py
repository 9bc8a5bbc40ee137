"""High level orchestration of the daily energy-efficiency experiment."""

from __future__ import annotations

import argparse
import logging
import math
from dataclasses import dataclass, field, fields, replace
from os import PathLike
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np
import pandas as pd

from . import __version__
from .config import ConfigBundle, NetworkSettings, load_config
from .models.efficiency import IntervalMetrics, network_metrics
from .models.params import PaKind
from .models.power import Accounting
from .models.traffic import (
    LoadProfile,
    ProfileError,
    QueueModel,
    StateDistribution,
    load_profile,
    steady_state,
)
from .network.geometry import CouplingGains, build_layout, compute_coupling
from .optimize.dimensioning import (
    FixedPointError,
    ReferenceDesign,
    calibrate_reference_lambda,
    get_reference_design,
    reference_activity_fixed_point,
    reference_queue,
)
from .optimize.game import GameConvergenceError, GameState, run_game
from .output.files import read_dataframe, read_json, save_dataframe, save_json

logger = logging.getLogger(__name__)

SCENARIOS = ("adaptive", "reference", "both")
SWEEP_DIMENSIONS = ("radius", "p_design")
INTERVAL_COLUMNS = (
    "interval",
    "load_fraction",
    "effective_load",
    "ee_adaptive",
    "ee_reference",
    "ee_gain_pct",
    "power_adaptive",
    "power_reference",
    "rate_adaptive",
    "rate_reference",
    "antennas_adaptive",
    "antennas_reference",
    "activity_adaptive",
    "activity_reference",
    "idle_adaptive",
    "idle_reference",
    "sweeps",
    "ee_dominance_ok",
)
SWEEP_COLUMNS = (
    "dimension",
    "value",
    "k_max",
    "m_max",
    "p_opt",
    "peak_ee",
    "ee_gain_pct",
    "energy_saving_pct",
    "rate_change_pct",
)
_JOINT_TOLERANCE = 1e-10


def _ensure_path(path: Path | str | PathLike[str]) -> Path:
    if isinstance(path, Path):
        return path
    if isinstance(path, (str, PathLike)):
        return Path(path)
    raise TypeError("path must be a string, Path or os.PathLike instance")


@dataclass(slots=True)
class RunConfig:
    """Configuration container used by :func:`run_daily`."""

    profile_path: Path | str | PathLike[str] | None = None
    output_dir: Path | str | PathLike[str] | None = None
    pa_kind: PaKind | str = PaKind.TPA
    cell_radius: float | None = None
    config_path: Path | str | PathLike[str] | None = None
    design_path: Path | str | PathLike[str] | None = None
    scenario: str = "both"
    accounting: Accounting | str = Accounting.IDLE_OFF
    fixed_p: float | None = None
    joint_fixed_point: bool | None = None
    num_intervals: int | None = None
    grid_size: int | None = None
    k_cap: int | None = None
    m_cap: int | None = None

    def __post_init__(self) -> None:
        if self.profile_path is not None:
            self.profile_path = _ensure_path(self.profile_path)
        if self.output_dir is not None:
            self.output_dir = _ensure_path(self.output_dir)
        if self.config_path is not None:
            self.config_path = _ensure_path(self.config_path)
        if self.design_path is not None:
            self.design_path = _ensure_path(self.design_path)
        self.pa_kind = PaKind.parse(self.pa_kind)
        self.accounting = Accounting.parse(self.accounting)
        if self.scenario not in SCENARIOS:
            raise ValueError(f"scenario must be one of {SCENARIOS}")
        if self.cell_radius is not None and self.cell_radius <= 0.0:
            raise ValueError("cell_radius must be positive")
        if self.fixed_p is not None and self.fixed_p <= 0.0:
            raise ValueError("fixed_p must be positive")

    def echo(self) -> dict[str, Any]:
        data = {}
        for item in fields(self):
            value = getattr(self, item.name)
            if isinstance(value, Path):
                value = value.as_posix()
            elif isinstance(value, (PaKind, Accounting)):
                value = value.value
            data[item.name] = value
        return data


@dataclass(slots=True)
class DailyReport:
    """Per-interval rows plus daily aggregates of one run."""

    rows: pd.DataFrame
    aggregates: dict[str, float | None]
    design: ReferenceDesign | None = None
    config: dict[str, Any] = field(default_factory=dict)
    policies: list[dict[str, Any]] = field(default_factory=list)
    lambda_max: float | None = None


@dataclass(slots=True)
class _Network:
    bundle: ConfigBundle
    gains: CouplingGains
    cell_radius: float


def _network_settings(config: RunConfig, bundle: ConfigBundle) -> NetworkSettings:
    settings = bundle.network
    if config.cell_radius is not None:
        settings = replace(settings, cell_radius=float(config.cell_radius))
    if config.grid_size is not None:
        settings = replace(settings, grid_size=int(config.grid_size))
    return settings


def _prepare(config: RunConfig, bundle: ConfigBundle | None) -> _Network:
    bundle = bundle or load_config(config.config_path)
    network = _network_settings(config, bundle)
    search = bundle.search
    if config.k_cap is not None:
        search = replace(search, k_cap=int(config.k_cap))
    if config.m_cap is not None:
        search = replace(search, m_cap=int(config.m_cap))
    params = replace(bundle.params, pa=replace(bundle.params.pa, kind=config.pa_kind))
    bundle = replace(bundle, params=params, network=network, search=search)

    layout = build_layout(network.num_cells, network.cell_radius, network.min_distance, network.grid_size)
    gains = compute_coupling(layout, network.pathloss_coeff, network.pathloss_exp)
    return _Network(bundle=bundle, gains=gains, cell_radius=network.cell_radius)


def dimension(
    config: RunConfig,
    *,
    bundle: ConfigBundle | None = None,
    output: Path | None = None,
) -> ReferenceDesign:
    """Dimension (or load from ``config.design_path``) the reference system.

    With ``output`` the fingerprinted design is also written there, ready for ``--design``.
    """

    network = _prepare(config, bundle)
    return _design(config, network, output=output)


def _design(config: RunConfig, network: _Network, *, output: Path | None = None) -> ReferenceDesign:
    params = network.bundle.params
    return get_reference_design(
        params.pa,
        network.gains,
        params,
        search=network.bundle.search,
        fixed_p=config.fixed_p,
        cell_radius=network.cell_radius,
        cache=config.design_path,
        output=output,
    )


def _per_cell_queues(state: GameState, traffic_bits: float) -> list[QueueModel]:
    return [QueueModel(m=state.policy.k_max, traffic_bits=traffic_bits, rates=row[1:]) for row in state.rates]


def _distributions(queues: Sequence[QueueModel], arrival_rate: float) -> tuple[StateDistribution, ...]:
    return tuple(steady_state(queue.with_arrival_rate(arrival_rate)) for queue in queues)


def _adaptive_interval(
    network: _Network,
    design: ReferenceDesign,
    queues: Sequence[QueueModel],
    arrival_rate: float,
    interval: int,
    joint: bool,
) -> tuple[GameState, tuple[StateDistribution, ...]]:
    bundle = network.bundle
    params = design.apply(bundle.params)
    distributions = _distributions(queues, arrival_rate)
    state = run_game(
        network.gains,
        params,
        distributions,
        design.m_max,
        max_sweeps=bundle.game.max_sweeps,
        method=bundle.game.method,
        interval=interval,
    )
    if not joint:
        return state, distributions

    for round_index in range(1, bundle.game.max_outer_rounds + 1):
        updated = _distributions(_per_cell_queues(state, bundle.traffic.traffic_bits), arrival_rate)
        change = max(float(np.max(np.abs(new.pi - old.pi))) for new, old in zip(updated, distributions))
        distributions = updated
        logger.debug("Intervalo %s: rodada conjunta %s, variação de pi=%.3e", interval, round_index, change)
        if change <= _JOINT_TOLERANCE:
            break
        state = run_game(
            network.gains,
            params,
            distributions,
            design.m_max,
            max_sweeps=bundle.game.max_sweeps,
            method=bundle.game.method,
            interval=interval,
        )
    return state, distributions


def _ratio_pct(numerator: float, denominator: float) -> float | None:
    if not math.isfinite(numerator) or not math.isfinite(denominator) or denominator == 0.0:
        return None
    return (numerator / denominator - 1.0) * 100.0


def aggregate(rows: pd.DataFrame) -> dict[str, float | None]:
    """Daily aggregates (percent) from the per-interval rows; intervals have equal duration."""

    keys = ("ee_gain_pct", "energy_saving_pct", "rate_change_pct", "mean_ee_adaptive", "mean_ee_reference")
    if rows.empty:
        return {key: None for key in keys}

    def mean(column: str) -> float:
        values = rows[column].astype(float)
        return float(values.mean()) if values.notna().all() else math.nan

    def total(column: str) -> float:
        values = rows[column].astype(float)
        return float(values.sum()) if values.notna().all() else math.nan

    saving = _ratio_pct(total("power_adaptive"), total("power_reference"))
    result = {
        "ee_gain_pct": _ratio_pct(mean("ee_adaptive"), mean("ee_reference")),
        "energy_saving_pct": None if saving is None else -saving,
        "rate_change_pct": _ratio_pct(mean("rate_adaptive"), mean("rate_reference")),
        "mean_ee_adaptive": mean("ee_adaptive"),
        "mean_ee_reference": mean("ee_reference"),
    }
    return {key: (value if value is not None and math.isfinite(value) else None) for key, value in result.items()}


def _row(
    h: int,
    fraction: float,
    effective: float,
    adaptive: IntervalMetrics | None,
    reference: IntervalMetrics | None,
    sweeps: int | None,
) -> dict[str, Any]:
    nan = math.nan
    row: dict[str, Any] = {
        "interval": h,
        "load_fraction": fraction,
        "effective_load": effective,
        "ee_adaptive": adaptive.ee if adaptive else nan,
        "ee_reference": reference.ee if reference else nan,
        "ee_gain_pct": nan,
        "power_adaptive": adaptive.power if adaptive else nan,
        "power_reference": reference.power if reference else nan,
        "rate_adaptive": adaptive.mean_rate if adaptive else nan,
        "rate_reference": reference.mean_rate if reference else nan,
        "antennas_adaptive": adaptive.mean_antennas if adaptive else nan,
        "antennas_reference": reference.mean_antennas if reference else nan,
        "activity_adaptive": 1.0 - adaptive.idle_probability if adaptive else nan,
        "activity_reference": 1.0 - reference.idle_probability if reference else nan,
        "idle_adaptive": adaptive.idle_probability if adaptive else nan,
        "idle_reference": reference.idle_probability if reference else nan,
        "sweeps": sweeps if sweeps is not None else 0,
        "ee_dominance_ok": True,
    }
    if adaptive and reference:
        row["ee_gain_pct"] = (adaptive.ee / reference.ee - 1.0) * 100.0
        row["ee_dominance_ok"] = adaptive.ee >= reference.ee * (1.0 - 1e-9)
    return row


def run_daily(
    config: RunConfig | Mapping[str, Any],
    *,
    bundle: ConfigBundle | None = None,
    profile: LoadProfile | None = None,
) -> DailyReport:
    """Dimension the reference system and evaluate both schemes over the daily profile."""

    cfg = config if isinstance(config, RunConfig) else RunConfig(**dict(config))
    if profile is None:
        if cfg.profile_path is None:
            raise ValueError("a load profile is required")
        profile = load_profile(cfg.profile_path)
    if cfg.num_intervals is not None and cfg.num_intervals != profile.num_intervals:
        raise ProfileError(
            f"expected {cfg.num_intervals} intervals, profile has {profile.num_intervals}", path=cfg.profile_path
        )
    joint = cfg.joint_fixed_point

    logger.info("Iniciando execução diária (%s, PA=%s)", profile.label, cfg.pa_kind.value)
    network = _prepare(cfg, bundle)
    settings = network.bundle
    joint = settings.game.joint_fixed_point if joint is None else joint
    design = _design(cfg, network)
    params = settings.params
    design_params = design.apply(params)
    traffic = settings.traffic

    lambda_max = calibrate_reference_lambda(
        design, network.gains, params, traffic_bits=traffic.traffic_bits, target_blocking=traffic.target_blocking
    )

    queues: list[QueueModel] = []
    if cfg.scenario in ("adaptive", "both"):
        peak = steady_state(
            reference_queue(design, network.gains, params, traffic_bits=traffic.traffic_bits).with_arrival_rate(lambda_max)
        )
        peak_state = run_game(
            network.gains,
            design_params,
            [peak] * network.gains.num_cells,
            design.m_max,
            max_sweeps=settings.game.max_sweeps,
            method=settings.game.method,
        )
        queues = _per_cell_queues(peak_state, traffic.traffic_bits)

    rows: list[dict[str, Any]] = []
    policies: list[dict[str, Any]] = []
    for h in range(profile.num_intervals):
        fraction = profile.fraction(h)
        effective = profile.effective_fraction(h, traffic.min_load_fraction)
        adaptive: IntervalMetrics | None = None
        reference: IntervalMetrics | None = None
        sweeps: int | None = None

        if queues:
            state, distributions = _adaptive_interval(network, design, queues, effective * lambda_max, h, joint)
            pis = np.stack([dist.pi for dist in distributions])
            adaptive = network_metrics(pis, state.policy.antennas, state.rates, design_params, cfg.accounting)
            sweeps = state.sweeps
            policies.append({"interval": h, "antennas": state.policy.antennas.tolist(), "maxtol": state.maxtol_series})

        if cfg.scenario in ("reference", "both"):
            solution = reference_activity_fixed_point(
                design,
                fraction,
                network.gains,
                params,
                lambda_max=lambda_max,
                traffic_bits=traffic.traffic_bits,
                accounting=cfg.accounting,
                floor=traffic.min_load_fraction,
            )
            reference = solution.metrics

        row = _row(h, fraction, effective, adaptive, reference, sweeps)
        if not row["ee_dominance_ok"]:
            logger.warning(
                "Intervalo %s: EE adaptativa %.4e abaixo da referência %.4e", h, row["ee_adaptive"], row["ee_reference"]
            )
        logger.info("Intervalo %s (carga %.2f): ganho de EE %.1f%%", h, effective, row["ee_gain_pct"])
        rows.append(row)

    frame = pd.DataFrame(rows, columns=list(INTERVAL_COLUMNS))
    report = DailyReport(
        rows=frame,
        aggregates=aggregate(frame),
        design=design,
        config=cfg.echo(),
        policies=policies,
        lambda_max=lambda_max,
    )
    logger.info("Execução diária concluída: %s", report.aggregates)
    return report


def sweep(
    config: RunConfig,
    dimension_name: str,
    values: Sequence[float],
    *,
    bundle: ConfigBundle | None = None,
) -> tuple[list[DailyReport], pd.DataFrame]:
    """Re-run :func:`run_daily` for each cell radius or pinned design power."""

    if dimension_name not in SWEEP_DIMENSIONS:
        raise ValueError(f"dimension must be one of {SWEEP_DIMENSIONS}")
    if not values or any(value <= 0.0 for value in values):
        raise ValueError("sweep values must be positive")

    reports: list[DailyReport] = []
    table: list[dict[str, Any]] = []
    for value in values:
        if dimension_name == "radius":
            variant = replace(config, cell_radius=float(value))
        else:
            variant = replace(config, fixed_p=float(value))
        logger.info("Varredura %s=%s", dimension_name, value)
        report = run_daily(variant, bundle=bundle)
        reports.append(report)
        design = report.design
        table.append(
            {
                "dimension": dimension_name,
                "value": float(value),
                "k_max": design.k_max if design else None,
                "m_max": design.m_max if design else None,
                "p_opt": design.p_opt if design else None,
                "peak_ee": design.peak_ee if design else None,
                "ee_gain_pct": report.aggregates.get("ee_gain_pct"),
                "energy_saving_pct": report.aggregates.get("energy_saving_pct"),
                "rate_change_pct": report.aggregates.get("rate_change_pct"),
            }
        )
    return reports, pd.DataFrame(table, columns=list(SWEEP_COLUMNS))


def emit(report: DailyReport, directory: Path | str | PathLike[str]) -> list[Path]:
    """Write ``intervals.csv``, ``summary.json`` and ``policy.json`` into ``directory``."""

    target = _ensure_path(directory)
    target.mkdir(parents=True, exist_ok=True)
    summary = {
        "version": __version__,
        "aggregates": report.aggregates,
        "design": report.design.to_dict() if report.design else None,
        "lambda_max": report.lambda_max,
        "config": report.config,
    }
    written = [
        save_dataframe(report.rows.loc[:, list(INTERVAL_COLUMNS)], target / "intervals.csv"),
        save_json(summary, target / "summary.json"),
        save_json({"intervals": report.policies}, target / "policy.json"),
    ]
    logger.info("Resultados salvos em %s", target)
    return written


def load_report(directory: Path | str | PathLike[str]) -> DailyReport:
    """Read back a report written by :func:`emit`."""

    source = _ensure_path(directory)
    summary = read_json(source / "summary.json")
    design = summary.get("design")
    return DailyReport(
        rows=read_dataframe(source / "intervals.csv"),
        aggregates=summary["aggregates"],
        design=ReferenceDesign.from_dict(design) if design else None,
        config=summary.get("config", {}),
        policies=read_json(source / "policy.json")["intervals"],
        lambda_max=summary.get("lambda_max"),
    )


def build_parser() -> argparse.ArgumentParser:
    """Return the CLI argument parser used by :func:`main`."""

    parser = argparse.ArgumentParser(description="Simulador de eficiência energética de massive MIMO adaptativo.")
    subparsers = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--pa", choices=[kind.value for kind in PaKind], default="tpa", help="Tipo de amplificador.")
    common.add_argument("--radius", type=float, default=None, help="Raio da célula em metros.")
    common.add_argument("--config", type=Path, default=None, help="Arquivo JSON de parâmetros.")
    common.add_argument("--design", type=Path, default=None, help="Cache JSON do dimensionamento de referência.")
    common.add_argument("--fixed-p", type=float, default=None, help="Potência por antena fixa (W).")
    common.add_argument("--grid-size", type=int, default=None, help="Pontos de teste por célula.")
    common.add_argument("--k-cap", type=int, default=None, help="Limite de K na busca exaustiva.")
    common.add_argument("--m-cap", type=int, default=None, help="Limite de M na busca exaustiva.")

    daily = argparse.ArgumentParser(add_help=False)
    daily.add_argument("--profile", type=Path, required=True, help="CSV do perfil diário de carga.")
    daily.add_argument("--out", type=Path, default=Path("results"), help="Diretório de saída.")
    daily.add_argument(
        "--accounting", choices=[mode.value for mode in Accounting], default="idle-off", help="Consumo da BS ociosa."
    )
    daily.add_argument("--scenario", choices=SCENARIOS, default="both", help="Cenários avaliados.")
    daily.add_argument(
        "--joint-fixed-point",
        action="store_true",
        default=None,
        help="Itera fila e jogo até o ponto fixo conjunto em cada intervalo.",
    )

    dimension_parser = subparsers.add_parser("dimension", parents=[common], help="Dimensiona o sistema de referência.")
    dimension_parser.add_argument("--out", type=Path, default=None, help="Arquivo JSON para o dimensionamento.")

    subparsers.add_parser("run", parents=[common, daily], help="Executa a simulação diária.")

    sweep_parser = subparsers.add_parser("sweep", parents=[common, daily], help="Varre raio ou potência de projeto.")
    sweep_parser.add_argument("--dimension", choices=SWEEP_DIMENSIONS, required=True, help="Grandeza varrida.")
    sweep_parser.add_argument("--values", type=float, nargs="+", required=True, help="Valores da varredura.")
    return parser


def _run_config(args: argparse.Namespace, profile: Path | None) -> RunConfig:
    return RunConfig(
        profile_path=profile,
        output_dir=getattr(args, "out", None),
        pa_kind=args.pa,
        cell_radius=args.radius,
        config_path=args.config,
        design_path=args.design,
        scenario=getattr(args, "scenario", "both"),
        accounting=getattr(args, "accounting", "idle-off"),
        fixed_p=args.fixed_p,
        joint_fixed_point=getattr(args, "joint_fixed_point", None),
        grid_size=args.grid_size,
        k_cap=args.k_cap,
        m_cap=args.m_cap,
    )


def main(argv: Sequence[str] | None = None) -> int:
    """Entry-point used by the command line interface."""

    from .config import configure_logging

    configure_logging()

    args = build_parser().parse_args(argv)
    logger.info("Parâmetros recebidos: %s", args)

    try:
        if args.command == "dimension":
            dimension(_run_config(args, None), output=args.out)
            return 0

        cfg = _run_config(args, args.profile)
        if args.command == "run":
            emit(run_daily(cfg), args.out)
            return 0

        reports, table = sweep(cfg, args.dimension, args.values)
        for value, report in zip(args.values, reports):
            emit(report, args.out / f"{args.dimension}_{value:g}")
        save_dataframe(table, args.out / "sweep.csv")
        return 0
    except (ProfileError, GameConvergenceError, FixedPointError) as exc:
        logger.error("Execução interrompida: %s", exc)
        return 1


if __name__ == "__main__":  # pragma: no cover - CLI execution helper
    raise SystemExit(main())


__all__ = [
    "DailyReport",
    "RunConfig",
    "aggregate",
    "build_parser",
    "dimension",
    "emit",
    "load_report",
    "main",
    "run_daily",
    "sweep",
]

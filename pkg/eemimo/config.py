"""Configurações do simulador.

Este módulo centraliza a configuração do logging, o carregamento de
variáveis de ambiente a partir de arquivos ``.env`` e a leitura do arquivo
JSON de parâmetros do sistema (chaves com o nome e a unidade de cada
constante).
"""

from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .models.params import PaModel, SystemParams, dbm_to_watt
from .optimize.dimensioning import SearchSettings

ENV_FILE = os.getenv("EEMIMO_ENV_FILE", ".env")
LOG_LEVEL_ENV = "EEMIMO_LOG_LEVEL"
LOG_FORMAT_ENV = "EEMIMO_LOG_FORMAT"
_DEFAULT_LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

DEFAULT_CONFIG = Path(__file__).resolve().parent.parent / "config" / "defaults.json"


def load_environment(path: os.PathLike[str] | str = ENV_FILE, *, override: bool = False) -> dict[str, str]:
    """Carrega variáveis de ambiente a partir de um arquivo ``.env``.

    Cada linha deve seguir o formato ``CHAVE=valor``. Linhas vazias e
    comentários iniciados com ``#`` são ignorados.
    """

    env_path = Path(path)
    if not env_path.exists():
        return {}

    loaded: dict[str, str] = {}
    for raw_line in env_path.read_text(encoding="utf-8").splitlines():
        line = raw_line.strip()
        if not line or line.startswith("#") or "=" not in line:
            continue

        key, value = line.split("=", 1)
        key = key.strip()
        value = value.strip().strip("\"'")
        if not key:
            continue

        if override or key not in os.environ:
            os.environ[key] = value
        loaded[key] = value

    return loaded


def _resolve_log_level(level: str | int) -> int:
    if isinstance(level, int):
        return level
    return getattr(logging, level.upper(), logging.INFO)


def configure_logging(level: str | int | None = None, fmt: str | None = None) -> None:
    """Configura o logging da aplicação.

    Args:
        level: Nível de logging (``INFO``, ``DEBUG``, etc.). Caso ``None``
            utiliza ``EEMIMO_LOG_LEVEL`` ou o padrão ``INFO``.
        fmt: Formato da mensagem de log. Caso ``None`` usa
            ``EEMIMO_LOG_FORMAT`` ou o padrão.
    """

    level_value = _resolve_log_level(level or os.getenv(LOG_LEVEL_ENV, "INFO"))
    fmt_value = fmt or os.getenv(LOG_FORMAT_ENV, _DEFAULT_LOG_FORMAT)

    root_logger = logging.getLogger()
    if root_logger.handlers:
        root_logger.setLevel(level_value)
        for handler in root_logger.handlers:
            handler.setLevel(level_value)
            handler.setFormatter(logging.Formatter(fmt_value))
        return

    logging.basicConfig(level=level_value, format=fmt_value)


@dataclass(slots=True, frozen=True)
class NetworkSettings:
    num_cells: int = 19
    cell_radius: float = 500.0
    min_distance: float = 35.0
    grid_size: int = 15000
    pathloss_coeff: float = 10.0 ** -3.53
    pathloss_exp: float = 3.76


@dataclass(slots=True, frozen=True)
class TrafficSettings:
    traffic_bits: float = 1e8
    target_blocking: float = 0.02
    min_load_fraction: float = 0.10

    def __post_init__(self) -> None:
        if self.traffic_bits <= 0.0:
            raise ValueError("traffic_bits must be positive")
        if not 0.0 < self.target_blocking < 1.0:
            raise ValueError("target_blocking must lie in (0, 1)")
        if not 0.0 < self.min_load_fraction <= 1.0:
            raise ValueError("min_load_fraction must lie in (0, 1]")


@dataclass(slots=True, frozen=True)
class GameSettings:
    max_sweeps: int = 1000
    method: str = "auto"
    joint_fixed_point: bool = False
    max_outer_rounds: int = 10

    def __post_init__(self) -> None:
        if self.max_sweeps < 1 or self.max_outer_rounds < 1:
            raise ValueError("iteration caps must be positive")


@dataclass(slots=True, frozen=True)
class ConfigBundle:
    params: SystemParams = field(default_factory=SystemParams)
    network: NetworkSettings = field(default_factory=NetworkSettings)
    search: SearchSettings = field(default_factory=SearchSettings)
    traffic: TrafficSettings = field(default_factory=TrafficSettings)
    game: GameSettings = field(default_factory=GameSettings)


# JSON key -> (SystemParams field, converter)
_PARAM_KEYS: dict[str, tuple[str, Any]] = {
    "bandwidth_hz": ("bandwidth", float),
    "noise_power_dbm": ("noise_power", dbm_to_watt),
    "coherence_symbols": ("coherence_symbols", float),
    "pilot_reuse": ("pilot_reuse", float),
    "k_max": ("k_max", int),
    "per_antenna_power_w": ("per_antenna_power", float),
    "p_syn_w": ("p_syn", float),
    "p_bs_w": ("p_bs", float),
    "p_oth_w": ("p_oth", float),
    "p_cod_w_per_gbps": ("p_cod", lambda value: float(value) * 1e-9),
    "p_dec_w_per_gbps": ("p_dec", lambda value: float(value) * 1e-9),
    "l_bs_gflops_per_w": ("l_bs", lambda value: float(value) * 1e9),
    "per_block_linear_processing": ("per_block_linear_processing", bool),
}
_PA_KEYS: dict[str, tuple[str, Any]] = {
    "kind": ("kind", str),
    "max_efficiency": ("max_efficiency", float),
    "epsilon": ("epsilon", float),
    "max_output_power_w": ("max_output_power", lambda value: None if value is None else float(value)),
    "papr_backoff_db": ("papr_backoff_db", float),
}
_NETWORK_KEYS: dict[str, tuple[str, Any]] = {
    "num_cells": ("num_cells", int),
    "cell_radius_m": ("cell_radius", float),
    "min_distance_m": ("min_distance", float),
    "grid_size": ("grid_size", int),
    "pathloss_coeff_log10": ("pathloss_coeff", lambda value: 10.0 ** float(value)),
    "pathloss_exp": ("pathloss_exp", float),
}
_SEARCH_KEYS: dict[str, tuple[str, Any]] = {
    "k_cap": ("k_cap", int),
    "m_cap": ("m_cap", int),
    "p_min_w": ("p_min", float),
    "p_max_w": ("p_max", float),
    "grid_points": ("grid_points", int),
    "p_tolerance_w": ("p_tolerance", float),
}
_TRAFFIC_KEYS: dict[str, tuple[str, Any]] = {
    "traffic_bits": ("traffic_bits", float),
    "target_blocking": ("target_blocking", float),
    "min_load_fraction": ("min_load_fraction", float),
}
_GAME_KEYS: dict[str, tuple[str, Any]] = {
    "max_sweeps": ("max_sweeps", int),
    "method": ("method", str),
    "joint_fixed_point": ("joint_fixed_point", bool),
    "max_outer_rounds": ("max_outer_rounds", int),
}
_SECTIONS = ("pa", "network", "search", "traffic", "game")


def _convert(section: str, data: Mapping[str, Any], keys: Mapping[str, tuple[str, Any]]) -> dict[str, Any]:
    if not isinstance(data, Mapping):
        raise TypeError(f"config section {section!r} must be an object")
    converted: dict[str, Any] = {}
    for key, value in data.items():
        if key not in keys:
            raise ValueError(f"unknown config key {section}.{key}" if section else f"unknown config key {key}")
        name, converter = keys[key]
        converted[name] = converter(value)
    return converted


def parse_config(data: Mapping[str, Any]) -> ConfigBundle:
    """Build a :class:`ConfigBundle` from an already decoded JSON object."""

    top_level = {key: value for key, value in data.items() if key not in _SECTIONS}
    params_kwargs = _convert("", top_level, _PARAM_KEYS)
    pa = PaModel(**_convert("pa", data.get("pa", {}), _PA_KEYS))
    return ConfigBundle(
        params=SystemParams(pa=pa, **params_kwargs),
        network=NetworkSettings(**_convert("network", data.get("network", {}), _NETWORK_KEYS)),
        search=SearchSettings(**_convert("search", data.get("search", {}), _SEARCH_KEYS)),
        traffic=TrafficSettings(**_convert("traffic", data.get("traffic", {}), _TRAFFIC_KEYS)),
        game=GameSettings(**_convert("game", data.get("game", {}), _GAME_KEYS)),
    )


def load_config(path: os.PathLike[str] | str | None = None) -> ConfigBundle:
    """Lê o arquivo JSON de parâmetros; chaves ausentes usam os valores padrão."""

    config_path = Path(path) if path is not None else DEFAULT_CONFIG
    data = json.loads(config_path.read_text(encoding="utf-8"))
    if not isinstance(data, Mapping):
        raise TypeError("config file must contain a JSON object")
    bundle = parse_config(data)
    logging.getLogger(__name__).debug("Configuração carregada de %s", config_path)
    return bundle


ENV_VARS = load_environment()

__all__ = [
    "ConfigBundle",
    "DEFAULT_CONFIG",
    "ENV_FILE",
    "ENV_VARS",
    "GameSettings",
    "NetworkSettings",
    "TrafficSettings",
    "configure_logging",
    "load_config",
    "load_environment",
    "parse_config",
]

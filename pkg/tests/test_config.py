from __future__ import annotations

import json
import logging
from dataclasses import fields

import pytest

from eemimo.config import (
    DEFAULT_CONFIG,
    GameSettings,
    TrafficSettings,
    configure_logging,
    load_config,
    load_environment,
    parse_config,
)
from eemimo.models.params import PaKind, SystemParams
from eemimo.optimize.dimensioning import SearchSettings


def test_default_config_matches_builtin_defaults():
    bundle = load_config()
    defaults = SystemParams()

    assert DEFAULT_CONFIG.exists()
    for item in fields(SystemParams):
        value = getattr(bundle.params, item.name)
        expected = getattr(defaults, item.name)
        if isinstance(expected, float):
            assert value == pytest.approx(expected, rel=1e-12)
        else:
            assert value == expected
    assert bundle.search == SearchSettings()
    assert bundle.network.pathloss_coeff == pytest.approx(10.0 ** -3.53, rel=1e-12)
    assert bundle.network.grid_size == 15000


def test_partial_config_keeps_defaults(tmp_path):
    path = tmp_path / "params.json"
    path.write_text(
        json.dumps({"p_oth_w": 10, "pa": {"kind": "etpa", "max_output_power_w": 1.155}, "game": {"method": "stationary"}}),
        encoding="utf-8",
    )

    bundle = load_config(path)
    assert bundle.params.p_oth == 10.0
    assert bundle.params.p_syn == 2.0
    assert bundle.params.pa.kind is PaKind.ETPA
    assert bundle.params.pa.max_output_power == 1.155
    assert bundle.game.method == "stationary"
    assert bundle.traffic == TrafficSettings()


def test_unit_suffixed_keys_are_converted():
    bundle = parse_config({"noise_power_dbm": -90, "l_bs_gflops_per_w": 20, "p_dec_w_per_gbps": 1.0})

    assert bundle.params.noise_power == pytest.approx(1e-12, rel=1e-12)
    assert bundle.params.l_bs == pytest.approx(20e9)
    assert bundle.params.p_dec == pytest.approx(1e-9)


def test_unknown_key_is_rejected():
    with pytest.raises(ValueError, match="unknown config key network.radius"):
        parse_config({"network": {"radius": 250}})
    with pytest.raises(ValueError, match="unknown config key bandwidth"):
        parse_config({"bandwidth": 1e6})


def test_invalid_settings_are_rejected():
    with pytest.raises(ValueError):
        TrafficSettings(target_blocking=1.5)
    with pytest.raises(ValueError):
        GameSettings(max_sweeps=0)
    with pytest.raises(TypeError):
        parse_config({"pa": ["tpa"]})


def test_load_environment_reads_dotenv(tmp_path, monkeypatch):
    env_file = tmp_path / ".env"
    env_file.write_text("# comentário\nEEMIMO_TEST_KEY='valor'\n\nINVALID\n", encoding="utf-8")
    monkeypatch.delenv("EEMIMO_TEST_KEY", raising=False)

    loaded = load_environment(env_file)

    assert loaded == {"EEMIMO_TEST_KEY": "valor"}
    monkeypatch.delenv("EEMIMO_TEST_KEY")
    assert load_environment(tmp_path / "missing.env") == {}


def test_configure_logging_uses_environment_level(monkeypatch):
    monkeypatch.setenv("EEMIMO_LOG_LEVEL", "DEBUG")
    root = logging.getLogger()
    previous = root.level

    try:
        configure_logging()
        assert root.level == logging.DEBUG
    finally:
        root.setLevel(previous)

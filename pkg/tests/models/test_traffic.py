from __future__ import annotations

import logging
from pathlib import Path

import numpy as np
import pytest

from eemimo.models.traffic import (
    LoadProfile,
    ProfileError,
    QueueError,
    QueueModel,
    StateDistribution,
    blocking_probability,
    calibrate_lambda_max,
    constant_rate_queue,
    erlang_b,
    erlang_distribution,
    interval_distribution,
    load_profile,
    queue_from_rates,
    steady_state,
)

PROJECT_ROOT = Path(__file__).resolve().parents[2]


def _decreasing_rates(m: int) -> np.ndarray:
    # Per-user rate of a cell whose SINR falls as more users share the antennas.
    users = np.arange(1, m + 1)
    return 1.8e7 * np.log2(1.0 + 150.0 * (160.0 - users) / users / 10.0)


def test_no_arrivals_gives_empty_cell():
    dist = steady_state(constant_rate_queue(10, 1e7))

    assert dist.idle == 1.0
    assert dist.blocking == 0.0
    assert dist.activity == 0.0


@pytest.mark.parametrize("servers", range(1, 21))
def test_constant_rate_queue_matches_erlang_b(servers):
    rate, bits = 2e6, 1e6
    for load in (0.1, 1.0, 7.5, 30.0):
        queue = constant_rate_queue(servers, rate, bits)
        arrival_rate = load * rate / bits

        dist = steady_state(queue.with_arrival_rate(arrival_rate))
        assert dist.blocking == pytest.approx(erlang_b(load, servers), rel=1e-10)
        np.testing.assert_allclose(dist.pi, erlang_distribution(load, servers), rtol=1e-10, atol=1e-300)


def test_single_server_blocking():
    queue = constant_rate_queue(1, 1.0, 1.0)

    assert blocking_probability(queue, 0.5) == pytest.approx(0.5 / 1.5, rel=1e-12)


def test_single_server_calibration():
    queue = constant_rate_queue(1, 1.0, 1.0)

    assert calibrate_lambda_max(queue, 0.02) == pytest.approx(0.02 / 0.98, abs=1e-7)


def test_calibration_hits_target_and_is_deterministic():
    queue = queue_from_rates(_decreasing_rates(76), 1e8)

    first = calibrate_lambda_max(queue, 0.02)
    second = calibrate_lambda_max(queue, 0.02)

    assert first == second
    assert blocking_probability(queue, first) == pytest.approx(0.02, abs=1e-6)


def test_lower_blocking_target_lowers_lambda():
    queue = queue_from_rates(_decreasing_rates(20), 1e8)

    assert calibrate_lambda_max(queue, 1e-6) < calibrate_lambda_max(queue, 0.02)


@pytest.mark.parametrize("target", [0.0, 1.0, -0.1])
def test_calibration_rejects_invalid_target(target):
    with pytest.raises(ValueError):
        calibrate_lambda_max(constant_rate_queue(4, 1e7), target)


def test_blocking_increases_with_arrivals():
    queue = queue_from_rates(_decreasing_rates(30), 1e8)
    values = [blocking_probability(queue, rate) for rate in np.linspace(0.01, 20.0, 30)]

    assert np.all(np.diff(values) > 0.0)


def test_heavy_load_stays_normalised():
    queue = constant_rate_queue(107, 1e5, 1e8)

    dist = steady_state(queue.with_arrival_rate(1e6))
    assert np.all(np.isfinite(dist.pi))
    assert dist.pi.sum() == pytest.approx(1.0, abs=1e-12)
    assert dist.blocking > 0.9


def test_interval_distribution_follows_profile():
    queue = queue_from_rates(_decreasing_rates(40), 1e8)
    lambda_max = calibrate_lambda_max(queue)
    profile = LoadProfile((0, 1, 2, 3, 4), (1.0, 0.5, 0.13, 0.10, 0.05))

    peak = interval_distribution(profile, 0, lambda_max, queue)
    assert peak.blocking == pytest.approx(0.02, abs=1e-6)

    occupancy = [interval_distribution(profile, h, lambda_max, queue).mean_occupancy() for h in (3, 2, 1, 0)]
    assert np.all(np.diff(occupancy) > 0.0)

    floored = interval_distribution(profile, 4, lambda_max, queue)
    np.testing.assert_array_equal(floored.pi, interval_distribution(profile, 3, lambda_max, queue).pi)


def test_queue_model_validation():
    with pytest.raises(QueueError):
        QueueModel(m=3, traffic_bits=1e8, rates=np.array([1e7, 0.0, 1e6]))
    with pytest.raises(QueueError):
        QueueModel(m=3, traffic_bits=1e8, rates=np.array([1e7, 1e6]))
    with pytest.raises(QueueError):
        QueueModel(m=0, traffic_bits=1e8, rates=np.array([]))

    queue = queue_from_rates([4e6, 2e6])
    assert queue.f(1) == 1.0
    assert queue.f(2) == 0.5


def test_point_mass_distribution():
    dist = StateDistribution.point_mass(5, 5)

    assert dist.blocking == 1.0
    assert dist.mean_occupancy() == 5.0


def test_load_profile_reads_valid_file(data_dir):
    profile = load_profile(data_dir / "profile_short.csv")

    assert profile.num_intervals == 4
    assert profile.intervals == (0, 1, 2, 3)
    assert profile.fractions == (1.0, 0.5, 0.2, 0.05)
    assert profile.label == "profile_short"
    assert profile.effective_fraction(3) == 0.10


def test_shipped_profiles_peak_at_one():
    europe = load_profile(PROJECT_ROOT / "data" / "profiles" / "europe_24.csv")
    residential = load_profile(PROJECT_ROOT / "data" / "profiles" / "residential_120.csv")

    assert europe.num_intervals == 24
    assert residential.num_intervals == 120
    assert europe.peak == 1.0
    assert residential.peak == 1.0


def test_load_profile_reports_offending_line(data_dir):
    with pytest.raises(ProfileError) as excinfo:
        load_profile(data_dir / "profile_out_of_range.csv")

    assert excinfo.value.line == 4
    assert ":4: " in str(excinfo.value)


@pytest.mark.parametrize(
    ("name", "line"),
    [
        ("profile_bad_header.csv", 1),
        ("profile_not_numeric.csv", 3),
        ("profile_repeated.csv", 3),
    ],
)
def test_load_profile_rejects_malformed_files(data_dir, name, line):
    with pytest.raises(ProfileError) as excinfo:
        load_profile(data_dir / name)

    assert excinfo.value.line == line


def test_load_profile_rejects_empty_file(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("", encoding="utf-8")

    with pytest.raises(ProfileError):
        load_profile(path)


def test_low_peak_profile_warns(data_dir, caplog):
    with caplog.at_level(logging.WARNING, logger="eemimo.models.traffic"):
        profile = load_profile(data_dir / "profile_low_peak.csv")

    assert profile.peak == 0.8
    assert any("abaixo de 1.0" in record.getMessage() for record in caplog.records)


def test_load_profile_dataclass_validation():
    with pytest.raises(ValueError):
        LoadProfile((0, 1), (0.5, 0.0))
    with pytest.raises(IndexError):
        LoadProfile.constant(1.0, 3).fraction(3)

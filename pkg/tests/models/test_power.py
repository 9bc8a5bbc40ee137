from __future__ import annotations

from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eemimo.models.params import PaKind, PaModel, SystemParams
from eemimo.models.power import (
    Accounting,
    baseband_coefficients,
    baseband_power,
    idle_power,
    pa_input_power,
    pa_input_power_array,
    power_vector,
    total_power,
)

EPSILON = 0.0082


def test_tpa_example():
    pa = PaModel(kind="tpa", max_output_power=0.631)

    assert pa_input_power(0.1, pa) == pytest.approx(0.3140, abs=1e-4)


def test_default_rating_follows_operating_point():
    assert pa_input_power(0.1, PaModel()) == pytest.approx(0.1 * 10**0.4 / 0.8, rel=1e-12)
    assert PaModel().transmit_limit() == float("inf")


def test_etpa_example_at_zero_output():
    pa = PaModel(kind="etpa", max_output_power=1.155)

    assert pa_input_power(0.0, pa) == pytest.approx(0.01174, rel=1e-3)


def test_tpa_draws_nothing_at_zero_output():
    assert pa_input_power(0.0, PaModel(kind=PaKind.TPA)) == 0.0


def test_output_above_backoff_limit_is_rejected():
    pa = PaModel(kind="tpa", max_output_power=0.631)

    with pytest.raises(ValueError):
        pa_input_power(0.2, pa)
    with pytest.raises(ValueError):
        pa_input_power(-0.1, pa)


def test_unknown_kinds_are_rejected():
    with pytest.raises(ValueError):
        PaKind.parse("class-b")
    with pytest.raises(ValueError):
        Accounting.parse("sleeping")
    assert PaKind.parse("ET-PA") is PaKind.ETPA
    assert Accounting.parse("active_idle") is Accounting.ACTIVE_IDLE


@settings(max_examples=200, deadline=None)
@given(
    peak=st.floats(min_value=0.05, max_value=20.0),
    share=st.floats(min_value=0.0, max_value=1.0),
)
def test_etpa_never_exceeds_tpa_above_crossing(peak, share):
    tpa = PaModel(kind="tpa", max_output_power=peak)
    etpa = PaModel(kind="etpa", max_output_power=peak)
    lower = EPSILON**2 * peak
    upper = tpa.transmit_limit()
    p = lower + share * (upper - lower)

    assert pa_input_power(p, etpa) <= pa_input_power(p, tpa) * (1.0 + 1e-12)


def test_pa_laws_cross_at_epsilon_squared():
    peak = 1.0
    p = EPSILON**2 * peak

    tpa = pa_input_power(p, PaModel(kind="tpa", max_output_power=peak))
    etpa = pa_input_power(p, PaModel(kind="etpa", max_output_power=peak))
    assert etpa == pytest.approx(tpa, rel=1e-12)

    below = p / 4.0
    assert pa_input_power(below, PaModel(kind="etpa", max_output_power=peak)) > pa_input_power(
        below, PaModel(kind="tpa", max_output_power=peak)
    )


@pytest.mark.parametrize("kind", ["tpa", "etpa"])
def test_pa_input_power_is_monotone(kind):
    pa = PaModel(kind=kind, max_output_power=1.0)
    p = np.linspace(0.0, pa.transmit_limit(), 50)

    values = np.array([pa_input_power(float(x), pa) for x in p])
    assert np.all(values >= 0.0)
    assert np.all(np.diff(values) > 0.0)
    np.testing.assert_allclose(pa_input_power_array(p, pa), values, rtol=1e-12)


def test_baseband_coefficients_without_users(params):
    assert baseband_coefficients(0, params) == (2.0, 1.0)


def test_baseband_cubic_term_for_one_user(params):
    c0, _ = baseband_coefficients(1, params)

    assert c0 - 2.0 == pytest.approx(1.0417e-7, rel=1e-3)


def test_coding_term(params):
    _, _, coding = baseband_power(20, 10, 1e8, params)

    assert coding == pytest.approx(0.9, rel=1e-12)


def test_per_block_flag_switches_linear_processing_cost(params):
    literal = replace(params, per_block_linear_processing=False)

    _, c1_block = baseband_coefficients(76, params)
    _, c1_literal = baseband_coefficients(76, literal)
    assert c1_literal - c1_block == pytest.approx(
        3.0 * params.bandwidth / params.l_bs * (1.0 - 1.0 / params.coherence_symbols) * 76**2, rel=1e-9
    )
    assert c1_literal > 27.0


def test_idle_accounting(params):
    assert total_power(0, 0, 0.0, params).total == 0.0
    assert idle_power(params, "active-idle") == pytest.approx(20.0)
    assert total_power(0, 0, 0.0, params, accounting=Accounting.ACTIVE_IDLE).c0 == pytest.approx(20.0)


def test_total_power_is_affine_in_antennas(params):
    totals = np.array([total_power(m, 12, 5e6, params).total for m in range(13, 80)])
    steps = np.diff(totals)

    np.testing.assert_allclose(steps, steps[0], rtol=1e-12)
    assert steps[0] == pytest.approx(total_power(13, 12, 5e6, params).c1, rel=1e-12)


def test_rate_term_is_optional(params):
    with_term = total_power(40, 12, 5e6, params)
    without = total_power(40, 12, 5e6, params, include_rate_term=False)

    assert with_term.total - without.total == pytest.approx(with_term.rate_coding_term, rel=1e-9)


def test_pa_draw_at_reference_operating_point(params):
    design = params.with_design(k_max=76, per_antenna_power=0.1)
    breakdown = total_power(158, 76, 0.0, design, include_rate_term=False)
    c1_bb = baseband_coefficients(76, design)[1]

    assert (breakdown.c1 - c1_bb) * 158 == pytest.approx(49.6, abs=0.5)


def test_power_vector_matches_scalar_total(params):
    users = np.array([1, 5, 30])
    antennas = np.array([4, 20, 90])
    rates = np.array([1e7, 3e6, 1e6])

    expected = [total_power(int(m), int(n), float(r), params).total for n, m, r in zip(users, antennas, rates)]
    np.testing.assert_allclose(power_vector(users, antennas, rates, params), expected, rtol=1e-12)


def test_system_params_validation():
    with pytest.raises(ValueError):
        SystemParams(k_max=800)
    with pytest.raises(ValueError):
        SystemParams(bandwidth=0.0)
    with pytest.raises(ValueError):
        PaModel(max_efficiency=1.5)

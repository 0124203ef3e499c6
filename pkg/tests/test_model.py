import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sflgame import (
    ClientProfile,
    CutCostModel,
    NonPositiveCost,
    SystemParams,
    comm_energy_fed,
    comm_energy_main,
    compute_latency,
    energy_coefficients,
    flops_at_cut,
    params_at_cut,
    total_energy,
)

from conftest import make_client, make_params

CANONICAL = CutCostModel(0.3779, -0.212, 0.1098, 0.4711)


class TestValidation:
    def test_single_client_rejected(self):
        with pytest.raises(ValueError, match="n_clients"):
            make_params(n_clients=1)

    def test_bad_bounds(self):
        with pytest.raises(ValueError):
            make_params(l_min=5, l_max=3)
        with pytest.raises(ValueError):
            make_params(r_min=0.0)
        with pytest.raises(ValueError):
            make_params(d_req=0.0)
        with pytest.raises(ValueError):
            make_params(rounds=0)

    def test_client_positivity(self):
        with pytest.raises(ValueError, match="cpu_freq"):
            make_client(cpu_freq=0.0)
        with pytest.raises(ValueError, match="psi"):
            make_client(psi=-1.0)

    def test_cost_model_signs(self):
        with pytest.raises(ValueError):
            CutCostModel(-0.1, 0.0, 1.0, 1.0)
        with pytest.raises(ValueError):
            CutCostModel(1.0, 0.0, 0.0, 1.0)
        with pytest.raises(ValueError):
            CutCostModel(1.0, 0.0, 1.0, -0.1)
        # flat exponential is a legitimate degenerate fit
        assert params_at_cut(CutCostModel(1.0, 0.0, 1.0, 0.0), 7) == 1.0


class TestFlopsAtCut:
    def test_canonical_low_cut(self):
        assert flops_at_cut(CANONICAL, 3) == pytest.approx(0.9217, rel=1e-12)

    def test_identity_slope(self):
        assert flops_at_cut(CutCostModel(1.0, 0.0, 1.0, 1.0), 5) == 5.0

    def test_canonical_high_cut_near_full_model(self):
        value = flops_at_cut(CANONICAL, 12)
        assert value == pytest.approx(4.3228, rel=1e-12)
        assert value == pytest.approx(4.3, rel=0.01)  # ~ the full-model workload

    def test_non_positive_cost(self):
        with pytest.raises(NonPositiveCost):
            flops_at_cut(CutCostModel(0.1, -10.0, 1.0, 1.0), 3)

    def test_affine_increment_is_slope(self):
        for l_c in range(1, 12):
            diff = flops_at_cut(CANONICAL, l_c + 1) - flops_at_cut(CANONICAL, l_c)
            assert diff == pytest.approx(0.3779, rel=1e-12)


class TestParamsAtCut:
    def test_canonical_low_cut(self):
        assert params_at_cut(CANONICAL, 3) == pytest.approx(0.45122248335603704, rel=1e-12)

    def test_canonical_high_cut(self):
        assert params_at_cut(CANONICAL, 12) == pytest.approx(31.315251589350588, rel=1e-12)

    def test_always_positive(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            model = CutCostModel(1.0, 0.0, 10 ** rng.uniform(-3, 3), rng.uniform(0, 2))
            assert params_at_cut(model, rng.uniform(1, 20)) > 0


class TestComputeLatency:
    def test_table_defaults(self, params, client):
        latency = compute_latency(params, client, CANONICAL, 1000.0, 3)
        assert latency == pytest.approx(0.48005208333333343, rel=1e-12)

    def test_zero_work(self, params, client):
        assert compute_latency(params, client, CANONICAL, 0.0, 3) == 0.0

    def test_doubling_frequency_halves(self, params, client):
        fast = make_client(cpu_freq=2 * client.cpu_freq)
        slow = compute_latency(params, client, CANONICAL, 500.0, 5)
        assert compute_latency(params, fast, CANONICAL, 500.0, 5) == pytest.approx(
            slow / 2, rel=1e-12)


class TestCommEnergy:
    def test_main_table_defaults(self, params, client):
        assert comm_energy_main(params, client) == pytest.approx(0.0735, rel=1e-12)

    def test_main_vanishes_with_power(self, params):
        tiny = make_client(p_tx=1e-12, p_rx=1e-12)
        assert comm_energy_main(params, tiny) < 1e-10

    def test_main_vanishes_with_rate(self, params):
        fast = make_client(rate_up_main=1e30, rate_down_main=1e30)
        assert comm_energy_main(params, fast) < 1e-10

    def test_fed_table_defaults(self, params, client):
        assert comm_energy_fed(params, client, CANONICAL, 3) == pytest.approx(
            0.04331735840217956, rel=1e-12)

    def test_fed_zero_bits(self, client):
        params = make_params(bits_per_param=0.0)
        assert comm_energy_fed(params, client, CANONICAL, 3) == 0.0

    def test_fed_increasing_in_cut(self, params, client):
        values = [comm_energy_fed(params, client, CANONICAL, l) for l in range(1, 13)]
        assert all(lo < hi for lo, hi in zip(values, values[1:]))


class TestEnergyCoefficients:
    def test_single_round_epoch(self, client):
        params = make_params(epochs=1, rounds=1)
        h, i = energy_coefficients(params, client, CANONICAL, 3)
        assert h == pytest.approx(0.1920208333333334, rel=1e-12)
        assert i == pytest.approx(7.393317358402181, rel=1e-12)

    def test_fixed_cost_contains_main_server_traffic(self, client):
        params = make_params(epochs=1, rounds=1)
        _, i = energy_coefficients(params, client, CANONICAL, 3)
        fed = comm_energy_fed(params, client, CANONICAL, 3)
        assert i - fed == pytest.approx(1 * 100 * 0.0735, rel=1e-12)

    def test_calibrated_marginal_cost(self, params, client):
        # rounds * epochs = 100 at the bundled defaults
        h, _ = energy_coefficients(params, client, CANONICAL, 3)
        assert h == pytest.approx(19.20208333333334, rel=1e-12)

    def test_monotonicity(self, params, client):
        hs, is_ = zip(*(energy_coefficients(params, client, CANONICAL, l)
                        for l in range(1, 13)))
        assert all(a < b for a, b in zip(hs, hs[1:]))
        assert all(a < b for a, b in zip(is_, is_[1:]))
        faster = make_client(cpu_freq=2.0e9)
        h_fast, _ = energy_coefficients(params, faster, CANONICAL, 3)
        assert h_fast < hs[2]


class TestTotalEnergy:
    def test_zero_contribution_costs_fixed_part(self, params, client):
        bd = total_energy(params, client, CANONICAL, 3, 0.0)
        assert bd.e_total == pytest.approx(bd.i_coeff, rel=1e-12)

    def test_linearity_in_contribution(self, params, client):
        e1 = total_energy(params, client, CANONICAL, 3, 700.0).e_total
        e2 = total_energy(params, client, CANONICAL, 3, 1400.0).e_total
        h = total_energy(params, client, CANONICAL, 3, 0.0).h_coeff
        assert e2 - e1 == pytest.approx(700.0 * h, rel=1e-9)

    def test_component_example(self, client):
        params = make_params(epochs=1, rounds=1)
        bd = total_energy(params, client, CANONICAL, 3, 1000.0)
        assert bd.e_total == pytest.approx(1000 * 0.1920208333333334 + 7.393317358402181,
                                           rel=1e-12)

    def test_negative_contribution_rejected(self, params, client):
        with pytest.raises(ValueError):
            total_energy(params, client, CANONICAL, 3, -1.0)


positive_float = st.floats(min_value=1e-2, max_value=1e3, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(
    freq_ghz=st.floats(0.5, 5.0),
    p_c=positive_float,
    epochs=st.integers(1, 10),
    rounds=st.integers(1, 50),
    l_c=st.integers(1, 12),
    d_n=st.floats(0.0, 1e5),
)
def test_composed_and_affine_energy_agree(freq_ghz, p_c, epochs, rounds, l_c, d_n):
    """The itemised bill and the reduced affine form are the same number."""
    params = make_params(epochs=epochs, rounds=rounds)
    client = make_client(cpu_freq=freq_ghz * 1e9, p_compute=p_c)
    bd = total_energy(params, client, CANONICAL, l_c, d_n)
    affine = d_n * bd.h_coeff + bd.i_coeff
    assert bd.e_total == pytest.approx(affine, rel=1e-12)
    composed = bd.e_compute + bd.e_com_main + bd.e_com_fed
    assert bd.e_total == pytest.approx(composed, rel=1e-12)
    assert bd.h_coeff > 0 and bd.i_coeff > 0


@settings(max_examples=100, deadline=None)
@given(rounds=st.integers(1, 40), epochs=st.integers(1, 10), d_n=st.floats(0.0, 1e4))
def test_energy_scales_linearly_in_rounds_and_epochs(rounds, epochs, d_n):
    client = make_client()
    base = total_energy(make_params(epochs=epochs, rounds=1), client, CANONICAL, 4, d_n)
    scaled = total_energy(make_params(epochs=epochs, rounds=rounds), client, CANONICAL, 4, d_n)
    assert scaled.e_total == pytest.approx(rounds * base.e_total, rel=1e-12)
    e_cmp_1 = total_energy(make_params(epochs=1, rounds=rounds), client, CANONICAL, 4, d_n)
    assert total_energy(make_params(epochs=epochs, rounds=rounds), client, CANONICAL, 4,
                        d_n).e_compute == pytest.approx(epochs * e_cmp_1.e_compute, rel=1e-12)

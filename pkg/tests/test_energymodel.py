import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uavpec.channel import build_channel_table
from uavpec.energymodel import (check_structure, connection_from_positions,
                                demand_matrix, energy_balance, energy_demand_coeff, harvest_time,
                                local_exec_energy, local_exec_time, objective,
                                offload_compute_time, total_latency, tx_energy, tx_time)
from uavpec.errors import InfeasibleError
from uavpec.model import generate_scenario
from uavpec.subsolvers import complete_allocation

from conftest import device


def test_local_exec_time():
    assert local_exec_time(1e6, 1e6) == 1.0
    assert local_exec_time(2e6, 1e6) == 2.0
    assert local_exec_time(5e5, 1e6) == 0.5


def test_local_exec_energy():
    assert local_exec_energy(1e-28, 1e6, 1e6, 3) == pytest.approx(1e-10, rel=1e-15)
    e1 = local_exec_energy(1e-28, 1e6, 1e6, 3)
    assert local_exec_energy(1e-28, 1e6, 2e6, 3) == pytest.approx(4 * e1, rel=1e-15)
    assert local_exec_energy(1e-28, 3e5, 2e6, 2) == pytest.approx(1e-28 * 3e5 * 2e6, rel=1e-15)


def test_tx_time_and_energy():
    assert tx_time(1e6, 1e7) == pytest.approx(0.1)
    assert tx_time(5e5, 5e5) == 1.0
    assert tx_time(1e6, 5e6) == pytest.approx(2 * tx_time(1e6, 1e7))
    assert tx_energy(2.83e-3, 1.0) == pytest.approx(2.83e-3)
    assert tx_energy(2.83e-3, 0.0) == 0.0
    assert tx_energy(2 * 2.83e-3, 1.0) == pytest.approx(2 * tx_energy(2.83e-3, 1.0))


def test_offload_compute_time():
    assert offload_compute_time(3e6, 3e6) == 1.0
    with pytest.raises(InfeasibleError):
        offload_compute_time(3e6, 0.0)


def test_energy_demand_coeff():
    k, F, f, eta, g = 1e-28, 1e6, 1e6, 0.8, 1e-4
    a0 = energy_demand_coeff(0, k, F, f, 2.83e-3, 0.25, eta, g)
    assert a0 == pytest.approx(1.25e-6, rel=1e-14)
    a1 = energy_demand_coeff(1, k, F, f, 2.83e-3, 0.25, eta, g)
    assert a1 == pytest.approx(2.83e-3 * 0.25 / (eta * g), rel=1e-14)


def test_harvest_time():
    assert harvest_time(1.25e-6, 0.1) == pytest.approx(1.25e-5, rel=1e-14)
    assert harvest_time(0.0, 0.0) == 0.0
    assert harvest_time(1e-6, 0.2) == pytest.approx(harvest_time(1e-6, 0.1) / 2)
    with pytest.raises(InfeasibleError):
        harvest_time(1e-6, 0.0)


def _single(rho, bits=5e3, cycles=8e5):
    from uavpec.model import make_scenario
    s = make_scenario([device(3, 4, bits, cycles)], [(0, 0)])
    t = build_channel_table(s)
    return s, t, complete_allocation(s, t, [[1]], [rho])


def test_single_device_local_composition():
    s, t, alloc = _single(0)
    A = demand_matrix(s, t, [0])[0, 0]
    expected = A / s.budget.power_max_w + 8e5 / 1e6
    assert total_latency(s, t, alloc).total == pytest.approx(expected, rel=1e-14)


def test_single_device_offload_composition():
    s, t, alloc = _single(1)
    A = demand_matrix(s, t, [1])[0, 0]
    r = t.rate_bps[0, 0]
    expected = A / 0.1 + 5e3 / r + 8e5 / 3e6
    bd = total_latency(s, t, alloc)
    assert bd.total == pytest.approx(expected, rel=1e-14)
    assert bd.local_s[0] == 0.0
    assert np.allclose(bd.total_s, bd.eh_s + bd.local_s + bd.tx_s + bd.offload_compute_s)


def test_symmetric_pair(colocated_pair):
    s, t = colocated_pair
    for rho in ([0, 0], [1, 1]):
        bd = total_latency(s, t, complete_allocation(s, t, [[1], [1]], rho))
        assert bd.total_s[0] == bd.total_s[1]


def test_structure_errors(small_scenario):
    s = small_scenario
    t = build_channel_table(s)
    good = complete_allocation(s, t, connection_from_positions([0, 1, 0, 1, 0], 2), np.ones(5))
    two = good.connect.copy()
    two[2] = 1
    with pytest.raises(InfeasibleError) as err:
        check_structure(s, good.copy(connect=two))
    assert err.value.device == 2
    over = good.charge_w * 2
    with pytest.raises(InfeasibleError) as err:
        total_latency(s, t, good.copy(charge_w=over))
    assert "charging" in str(err.value)
    starve = good.charge_w.copy()
    starve[1] = 0
    with pytest.raises(InfeasibleError) as err:
        total_latency(s, t, good.copy(charge_w=starve))
    assert (err.value.device, err.value.position) == (1, 1)


def test_energy_balance_closed_form():
    s = generate_scenario(12, 3, seed=4)
    t = build_channel_table(s)
    rho = np.arange(12) % 2
    alloc = complete_allocation(s, t, connection_from_positions(np.arange(12) % 3, 3), rho)
    harvested, consumed = energy_balance(s, t, alloc, total_latency(s, t, alloc))
    assert np.allclose(harvested, consumed, rtol=1e-12, atol=0)


def test_latency_decreases_with_resources():
    s = generate_scenario(4, 1, seed=6)
    t = build_channel_table(s)
    alloc = complete_allocation(s, t, np.ones((4, 1)), np.ones(4))
    base = total_latency(s, t, alloc).total_s
    for i in range(4):
        p = alloc.charge_w.copy()
        p[i] *= 0.9
        f = alloc.cpu_share_hz.copy()
        f[i] *= 0.9
        assert total_latency(s, t, alloc.copy(charge_w=p)).total_s[i] > base[i]
        assert total_latency(s, t, alloc.copy(cpu_share_hz=f)).total_s[i] > base[i]


def test_mode_collapse_difference():
    s = generate_scenario(3, 1, seed=10)
    t = build_channel_table(s)
    alloc = complete_allocation(s, t, np.ones((3, 1)), np.ones(3))
    before = total_latency(s, t, alloc).total_s[1]
    flipped = alloc.copy(offload=np.array([1, 0, 1]))
    after = total_latency(s, t, flipped).total_s[1]
    p = alloc.charge_w[1, 0]
    d_eh = (demand_matrix(s, t, [0, 0, 0])[1, 0] - demand_matrix(s, t, [1, 1, 1])[1, 0]) / p
    expected = (s.task_cycles[1] / s.local_freq[1]
                - (s.task_bits[1] / t.rate_bps[1, 0] + s.task_cycles[1] / alloc.cpu_share_hz[1, 0])
                + d_eh)
    assert after - before == pytest.approx(expected, rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10 ** 6), n=st.integers(1, 10), m=st.integers(1, 4),
       bits=st.lists(st.booleans(), min_size=10, max_size=10))
def test_energy_balance_property(seed, n, m, bits):
    s = generate_scenario(n, m, seed=seed)
    t = build_channel_table(s)
    rho = np.array(bits[:n], dtype=np.int8)
    pos = np.random.default_rng(seed).integers(0, m, size=n)
    alloc = complete_allocation(s, t, connection_from_positions(pos, m), rho)
    bd = total_latency(s, t, alloc)
    harvested, consumed = energy_balance(s, t, alloc, bd)
    assert np.all(np.abs(harvested - consumed) <= 1e-9 * consumed)
    assert np.all(bd.total_s >= 0)
    assert objective(s, t, alloc) == pytest.approx(bd.total_s.sum(), rel=1e-15)


def test_allocation_to_dict():
    s, t, alloc = _single(1)
    d = alloc.to_dict()
    assert d["connect"] == [[1]] and d["offload"] == [1]
    assert d["cpu_share_hz"] == [[3e6]]

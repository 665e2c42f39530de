import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uavpec.channel import (SPEED_OF_LIGHT, average_pathloss_db, build_channel_table, channel_gain,
                            db_to_linear, distance, elevation_deg, free_space_pathloss_db,
                            linear_to_db, los_nlos_pathloss_db, los_probability, uplink_rate_bps)
from uavpec.errors import ChannelDomainError
from uavpec.model import ElevationConvention, PhysicsConfig, generate_scenario, make_scenario

from conftest import device

# Reference values evaluated independently at 30 digits (mpmath).
FSPL_2GHZ_C2998 = 38.4681646234763355644
PLOS_AT_A = 0.170068027210884353741
PLOS_90_EPS = 3.75420630896709211203e-18
ELEV_SLANT_345 = 38.6598082540900906040
RATE_TABLE2_60DB = 19373443.9215023238909


@pytest.mark.parametrize("w, q, h, expected", [
    ((0, 0), (0, 0), 10, 10.0),
    ((0, 3), (0, 0), 4, 5.0),
    ((30, 40), (0, 0), 10, math.sqrt(2600)),
])
def test_distance(w, q, h, expected):
    assert distance(w, q, h) == pytest.approx(expected, rel=1e-15)


def test_fspl():
    assert free_space_pathloss_db(SPEED_OF_LIGHT / (4 * math.pi)) == pytest.approx(0.0, abs=1e-12)
    assert free_space_pathloss_db(10 * SPEED_OF_LIGHT / (4 * math.pi)) == pytest.approx(20.0, abs=1e-12)
    assert free_space_pathloss_db(2e9, c=2.998e8) == pytest.approx(FSPL_2GHZ_C2998, abs=1e-10)


def test_los_probability_examples():
    assert los_probability(4.88, 4.88, 0.49) == pytest.approx(PLOS_AT_A, rel=1e-14)
    eps = 4.88 * math.exp(-0.49 * (90 - 4.88))
    assert eps == pytest.approx(PLOS_90_EPS, rel=1e-12)
    assert eps < 1e-17
    assert 1.0 - los_probability(90.0, 4.88, 0.49) <= 1e-16
    assert los_probability(30.0, 4.88, 0.6) > los_probability(30.0, 4.88, 0.49)


@settings(max_examples=100)
@given(a=st.floats(0.5, 20), b=st.floats(0.05, 2),
       t=st.lists(st.floats(0.1, 90), min_size=2, max_size=20))
def test_los_probability_monotone(a, b, t):
    theta = np.sort(np.array(t))
    p = los_probability(theta, a, b)
    assert np.all((p > 0) & (p <= 1))
    assert np.all(np.diff(p) >= 0)


def test_elevation_examples():
    h = ElevationConvention.HORIZONTAL
    assert elevation_deg((0, 0), (0, 0), 10, h) == 90.0
    assert elevation_deg((0, 0), (10, 0), 10, h) == pytest.approx(45.0, abs=1e-12)
    got = elevation_deg((0, 3), (0, 0), 4, ElevationConvention.SLANT)
    assert got == pytest.approx(ELEV_SLANT_345, abs=1e-12)


def test_average_pathloss():
    assert average_pathloss_db(1.0, 100.0, 120.0) == 100.0
    assert average_pathloss_db(0.0, 100.0, 120.0) == 120.0
    assert average_pathloss_db(0.5, 100.0, 120.0) == 110.0


def test_uplink_rate_examples():
    B = 1e7
    assert uplink_rate_bps(1.0, 1.0, 0.0, B) == pytest.approx(B, rel=1e-15)
    assert uplink_rate_bps(3.0, 1.0, 0.0, B) == pytest.approx(2 * B, rel=1e-15)
    assert uplink_rate_bps(2.83e-3, 1e-9, 60.0, B) == pytest.approx(RATE_TABLE2_60DB, rel=1e-12)


@settings(max_examples=60)
@given(lam=st.floats(30, 150), bw=st.floats(1e5, 1e8), p=st.floats(1e-4, 1.0))
def test_uplink_rate_monotone(lam, bw, p):
    r = uplink_rate_bps(p, 1e-9, lam, bw)
    assert r > 0
    assert uplink_rate_bps(p, 1e-9, lam + 1.0, bw) < r
    assert uplink_rate_bps(p, 1e-9, lam, 2 * bw) > r
    assert uplink_rate_bps(2 * p, 1e-9, lam, bw) > r


def test_channel_gain():
    assert channel_gain(1e-3, 1.0) == 1e-3
    assert channel_gain(1e-3, 10.0) == pytest.approx(1e-4, rel=1e-15)
    assert channel_gain(1e-3, 40.0) == pytest.approx(channel_gain(1e-3, 20.0) / 2, rel=1e-15)
    with pytest.raises(ChannelDomainError):
        channel_gain(1e-3, 0.5)


def test_db_helpers_invert():
    x = np.array([-30.0, 0.0, 21.0, 60.0])
    assert np.allclose(linear_to_db(db_to_linear(x)), x, rtol=0, atol=1e-12)


def test_table_matches_scalar_composition():
    s = make_scenario([device(3.0, 4.0)], [(0.0, 0.0)])
    ph = s.physics
    t = build_channel_table(s)
    d = math.sqrt(25 + ph.altitude_m ** 2)
    theta = math.degrees(math.atan(ph.altitude_m / 5.0))
    p_los = 1 / (1 + ph.los_a * math.exp(-ph.los_b * (theta - ph.los_a)))
    fs = 20 * math.log10(ph.carrier_hz) + 20 * math.log10(4 * math.pi / SPEED_OF_LIGHT)
    pl_los = fs + 20 * math.log10(d) + ph.eta_los_db
    pl_nlos = fs + 20 * math.log10(d) + ph.eta_nlos_db
    lam = p_los * pl_los + (1 - p_los) * pl_nlos
    rate = ph.bandwidth_hz * math.log2(1 + 2.83e-3 / (ph.noise_power_w * 10 ** (lam / 10)))
    assert t.dist_m[0, 0] == pytest.approx(d, rel=1e-14)
    assert t.pathloss_db[0, 0] == pytest.approx(lam, rel=1e-13)
    assert t.rate_bps[0, 0] == pytest.approx(rate, rel=1e-12)
    assert t.gain[0, 0] == pytest.approx(ph.ref_gain / d, rel=1e-14)
    assert los_nlos_pathloss_db(d, ph.carrier_hz, 0.1) == pytest.approx(pl_los, rel=1e-14)


def test_table_invariants_and_readonly():
    s = generate_scenario(30, 4, seed=2)
    t = build_channel_table(s)
    ph = s.physics
    assert t.dist_m.shape == (30, 4)
    assert np.all(t.dist_m >= ph.altitude_m)
    pl_los = los_nlos_pathloss_db(t.dist_m, ph.carrier_hz, ph.eta_los_db)
    pl_nlos = los_nlos_pathloss_db(t.dist_m, ph.carrier_hz, ph.eta_nlos_db)
    assert np.all((t.pathloss_db >= pl_los - 1e-12) & (t.pathloss_db <= pl_nlos + 1e-12))
    assert np.all(t.rate_bps > 0) and np.all(t.gain > 0)
    with pytest.raises(ValueError):
        t.rate_bps[0, 0] = 1.0


def test_table_permutation_equivariant():
    devs = [device(1, 2), device(20, 5), device(7, 30)]
    pos = [(0, 0), (25, 25)]
    a = build_channel_table(make_scenario(devs, pos))
    perm = [2, 0, 1]
    b = build_channel_table(make_scenario([devs[k] for k in perm], pos))
    for x, y in ((a.dist_m, b.dist_m), (a.rate_bps, b.rate_bps), (a.gain, b.gain)):
        assert np.array_equal(x[perm], y)


def test_doubling_altitude_overhead():
    devs = [device(0, 0), device(10, 10)]
    pos = [(0, 0), (10, 10)]
    t = build_channel_table(make_scenario(devs, pos, physics=PhysicsConfig(altitude_m=20.0)))
    assert t.dist_m[0, 0] == 20.0 and t.dist_m[1, 1] == 20.0


def test_table_deterministic():
    s = generate_scenario(10, 3, seed=8)
    a, b = build_channel_table(s), build_channel_table(s)
    assert np.array_equal(a.rate_bps, b.rate_bps)


def test_slant_convention_lowers_los():
    devs = [device(5, 5)]
    h = build_channel_table(make_scenario(devs, [(0, 0)]))
    p = build_channel_table(make_scenario(devs, [(0, 0)],
                                          physics=PhysicsConfig(elevation_convention="slant")))
    assert p.pathloss_db[0, 0] > h.pathloss_db[0, 0]


def test_to_csv(tmp_path):
    t = build_channel_table(generate_scenario(3, 2, seed=1))
    path = tmp_path / "ch.csv"
    t.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "device,position,dist_m,pathloss_db,rate_bps,gain"
    assert len(lines) == 1 + 6

import math

import pytest
from hypothesis import given, strategies as st

import oracles
from wlanvoip.errors import ConfigError, MisuseError
from wlanvoip.phy import (
    RATES_MBPS, ChannelMask, RadioConfig, Reception, channels_compatible, crossover_distance,
    mode_table, phy_mode, ppdu_duration, reception_outcome, two_ray_rx_power,
)

CFG = RadioConfig()


def test_mode_table():
    assert RATES_MBPS == (6, 9, 12, 18, 24, 36, 48, 54)
    bits = [m.data_bits_per_symbol for m in mode_table().values()]
    assert bits == [24, 36, 48, 72, 96, 144, 192, 216]
    thresholds = [m.min_rx_snr for m in mode_table().values()]
    assert thresholds == sorted(thresholds)
    with pytest.raises(ConfigError):
        phy_mode(11)


@pytest.mark.parametrize("key", sorted(oracles.HAND_AIRTIMES))
def test_airtime_matches_hand_values(key):
    nbytes, rate = key
    assert ppdu_duration(nbytes, phy_mode(rate)) == oracles.HAND_AIRTIMES[key]


@given(st.integers(0, 2400), st.sampled_from(RATES_MBPS))
def test_airtime_matches_symbol_count(nbytes, rate):
    d = ppdu_duration(nbytes, phy_mode(rate))
    assert d == oracles.airtime_by_symbols(nbytes, rate)
    assert (d - 20) % 4 == 0


@given(st.integers(0, 2400), st.sampled_from(RATES_MBPS))
def test_airtime_monotone(nbytes, rate):
    mode = phy_mode(rate)
    assert ppdu_duration(nbytes + 1, mode) >= ppdu_duration(nbytes, mode)
    faster = [r for r in RATES_MBPS if r > rate]
    for r in faster:
        assert ppdu_duration(nbytes, phy_mode(r)) <= ppdu_duration(nbytes, mode)


def test_crossover_distance():
    d_c = crossover_distance(CFG, CFG)
    assert d_c == pytest.approx(537.5, rel=0.002)
    assert d_c == pytest.approx(oracles.crossover(1.5, 5.7e9))


def test_doubling_laws():
    near = two_ray_rx_power(CFG, CFG, 100) - two_ray_rx_power(CFG, CFG, 200)
    far = two_ray_rx_power(CFG, CFG, 1000) - two_ray_rx_power(CFG, CFG, 2000)
    assert near == pytest.approx(20 * math.log10(2), abs=1e-9)  # 6.02 dB
    assert far == pytest.approx(40 * math.log10(2), abs=1e-9)   # 12.04 dB


@pytest.mark.parametrize("d", [1.0, 50.0, 300.0, 537.0, 538.0, 900.0, 5000.0])
def test_two_ray_against_linear_units(d):
    got = two_ray_rx_power(CFG, CFG, d)
    assert got == pytest.approx(oracles.two_ray_dbm(39, 15, 5.7e9, 1.5, d), abs=1e-9)


def test_two_ray_continuity_and_domain():
    d_c = crossover_distance(CFG, CFG)
    below = two_ray_rx_power(CFG, CFG, d_c * (1 - 1e-9))
    at = two_ray_rx_power(CFG, CFG, d_c)
    assert abs(below - at) < 0.5
    for bad in (0, -3):
        with pytest.raises(MisuseError):
            two_ray_rx_power(CFG, CFG, bad)


@given(st.floats(1.0, 5000.0), st.floats(1.001, 3.0))
def test_two_ray_decreasing_on_each_side(d, factor):
    d_c = crossover_distance(CFG, CFG)
    d2 = d * factor
    if (d < d_c) == (d2 < d_c):
        assert two_ray_rx_power(CFG, CFG, d2) < two_ray_rx_power(CFG, CFG, d)


def test_reception_rules():
    mode = phy_mode(54)
    noise = -96.0
    thr = noise + mode.min_rx_snr
    assert reception_outcome(0.0, mode, True, noise) is Reception.LOST_COLLISION
    assert reception_outcome(thr, mode, False, noise) is Reception.DELIVERED
    assert reception_outcome(thr - 0.1, mode, False, noise) is Reception.LOST_SNR


def test_channel_masks():
    assert channels_compatible(ChannelMask.parse("0100"), ChannelMask.parse("0100"))
    assert not channels_compatible(ChannelMask.parse("0100"), ChannelMask.parse("0010"))
    assert not channels_compatible(ChannelMask.parse("0000"), ChannelMask.parse("1111"))
    assert str(ChannelMask.parse("0001")) == "0001"
    for bad in ("010", "0120", "11111"):
        with pytest.raises(ConfigError):
            ChannelMask.parse(bad)


def test_radio_config_validation():
    with pytest.raises(ConfigError):
        RadioConfig(carrier_freq=0)
    with pytest.raises(ConfigError):
        RadioConfig(antenna_height=-1)
    with pytest.raises(ConfigError):
        RadioConfig(tx_power=float("inf"))

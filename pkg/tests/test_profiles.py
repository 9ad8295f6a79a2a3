import math

import pytest

from ismscan import profiles
from ismscan.errors import (
    ChannelRangeError,
    FrequencyRangeError,
    QuantizationError,
    UnknownProfileError,
)

# id, f_min, f_max, step_khz, p_min, p_max, raw_max, channels
TABLE = [
    ("nrf24l01", 2400.0, 2525.0, 977.0, -85.0, -42.0, 43, 128),
    ("cc2500", 2400.0, 2483.5, 500.0, -104.0, -13.0, 114, 168),
    ("cc2511", 2400.0, 2483.5, 500.0, -110.0, -6.5, 207, 168),
    ("cyrf6934", 2400.0, 2483.0, 1000.0, -90.0, -40.0, 12, 84),
    ("cywusb6935", 2400.0, 2483.0, 1000.0, -95.0, -40.0, 31, 84),
    ("cyrf6936", 2400.0, 2497.0, 1000.0, -97.0, -47.0, 38, 98),
]


def test_builtin_registry_is_complete():
    ids = [p.id for p in profiles.builtin_profiles()]
    assert ids == [row[0] for row in TABLE]


@pytest.mark.parametrize("pid,f_min,f_max,step,p_min,p_max,raw_max,channels", TABLE)
def test_table_values(pid, f_min, f_max, step, p_min, p_max, raw_max, channels):
    p = profiles.profile_by_id(pid)
    assert p.f_min_mhz == f_min
    assert p.f_max_mhz == f_max
    assert p.step_khz == step
    assert p.p_min_dbm == p_min
    assert p.p_max_dbm == p_max
    assert p.raw_max == raw_max
    assert p.channel_count == channels
    assert p.p_min_dbm < p.p_max_dbm


def test_unknown_profile():
    with pytest.raises(UnknownProfileError, match="nosuch"):
        profiles.profile_by_id("nosuch")


class TestChannelGrid:
    def test_cywusb_grid_points(self):
        p = profiles.profile_by_id("cywusb6935")
        assert profiles.channel_to_freq(p, 0) == 2400.0
        assert profiles.channel_to_freq(p, 47) == 2447.0
        assert profiles.channel_to_freq(p, 83) == 2483.0

    def test_channel_out_of_range(self):
        p = profiles.profile_by_id("cywusb6935")
        with pytest.raises(ChannelRangeError, match="cywusb6935"):
            profiles.channel_to_freq(p, 84)
        with pytest.raises(ChannelRangeError, match="83"):
            profiles.channel_to_freq(p, -1)

    def test_freq_to_channel_nearest(self):
        p = profiles.profile_by_id("cywusb6935")
        assert profiles.freq_to_channel(p, 2447.0) == 47
        assert profiles.freq_to_channel(p, 2447.4) == 47
        assert profiles.freq_to_channel(p, 2446.6) == 47

    def test_freq_midpoint_rounds_down(self):
        p = profiles.profile_by_id("cywusb6935")
        assert profiles.freq_to_channel(p, 2447.5) == 47
        assert profiles.freq_to_channel(p, 2446.5) == 46

    def test_freq_edge_tolerance(self):
        p = profiles.profile_by_id("cywusb6935")
        assert profiles.freq_to_channel(p, 2399.6) == 0
        assert profiles.freq_to_channel(p, 2483.4) == 83
        with pytest.raises(FrequencyRangeError):
            profiles.freq_to_channel(p, 2399.0)
        with pytest.raises(FrequencyRangeError):
            profiles.freq_to_channel(p, 2484.0)

    @pytest.mark.parametrize("pid", [row[0] for row in TABLE])
    def test_grid_round_trip_every_channel(self, pid):
        p = profiles.profile_by_id(pid)
        freqs = profiles.channel_freqs(p)
        assert len(freqs) == p.channel_count
        for ch in range(p.channel_count):
            f = profiles.channel_to_freq(p, ch)
            assert f == freqs[ch]
            assert profiles.freq_to_channel(p, f) == ch
        assert all(b > a for a, b in zip(freqs, freqs[1:]))


class TestQuantization:
    def test_cywusb_examples(self):
        p = profiles.profile_by_id("cywusb6935")
        assert profiles.raw_to_dbm(p, 0) == -95.0
        assert profiles.raw_to_dbm(p, 31) == -40.0
        assert profiles.raw_to_dbm(p, 16) == pytest.approx(-95.0 + 16 * 55 / 31, abs=0.1)

    def test_raw_out_of_range(self):
        p = profiles.profile_by_id("cywusb6935")
        with pytest.raises(QuantizationError, match="31"):
            profiles.raw_to_dbm(p, 32)
        with pytest.raises(QuantizationError):
            profiles.raw_to_dbm(p, -1)

    def test_dbm_to_raw_clamps(self):
        p = profiles.profile_by_id("cywusb6935")
        assert profiles.dbm_to_raw(p, -200.0) == 0
        assert profiles.dbm_to_raw(p, -40.0) == 31
        assert profiles.dbm_to_raw(p, 10.0) == 31

    def test_dbm_to_raw_half_up(self):
        p = profiles.profile_by_id("cywusb6935")
        step = (p.p_max_dbm - p.p_min_dbm) / p.raw_max
        assert profiles.dbm_to_raw(p, p.p_min_dbm + 0.5 * step) == 1
        assert profiles.dbm_to_raw(p, p.p_min_dbm + 0.49 * step) == 0

    @pytest.mark.parametrize("pid", [row[0] for row in TABLE])
    def test_endpoints_exact(self, pid):
        p = profiles.profile_by_id(pid)
        assert profiles.raw_to_dbm(p, 0) == p.p_min_dbm
        assert profiles.raw_to_dbm(p, p.raw_max) == p.p_max_dbm

    @pytest.mark.parametrize("pid", [row[0] for row in TABLE])
    def test_exhaustive_code_round_trip(self, pid):
        p = profiles.profile_by_id(pid)
        dbms = [profiles.raw_to_dbm(p, raw) for raw in range(p.raw_max + 1)]
        assert all(b > a for a, b in zip(dbms, dbms[1:]))  # strictly monotone
        for raw, dbm in enumerate(dbms):
            assert profiles.dbm_to_raw(p, dbm) == raw


class TestConfigurableStep:
    def test_cc2500_step_limits(self):
        p = profiles.profile_by_id("cc2500")
        narrow = profiles.with_step_khz(p, 58.0)
        wide = profiles.with_step_khz(p, 812.0)
        assert narrow.channel_count == math.floor(83500 / 58) + 1
        assert wide.channel_count == math.floor(83500 / 812) + 1
        with pytest.raises(ChannelRangeError):
            profiles.with_step_khz(p, 57.9)
        with pytest.raises(ChannelRangeError):
            profiles.with_step_khz(p, 812.1)

    def test_fixed_grid_rejects_restep(self):
        p = profiles.profile_by_id("cywusb6935")
        with pytest.raises(ChannelRangeError, match="fixed"):
            profiles.with_step_khz(p, 500.0)


class TestProfileInvariants:
    def test_bad_profiles_rejected(self):
        with pytest.raises(ValueError):
            profiles.DeviceProfile("x", 2500, 2400, 1000, -90, -40, 31, 1.0)
        with pytest.raises(ValueError):
            profiles.DeviceProfile("x", 2400, 2483, 1000, -40, -90, 31, 1.0)
        with pytest.raises(ValueError):
            profiles.DeviceProfile("x", 2400, 2483, -1, -90, -40, 31, 1.0)
        with pytest.raises(ValueError):
            profiles.DeviceProfile("x", 2400, 2483, 1000, -90, -40, 0, 1.0)
        with pytest.raises(ValueError):  # under 2 channels
            profiles.DeviceProfile("x", 2400, 2400.5, 1000, -90, -40, 31, 1.0)

"""Transceiver channel grids and RSSI code conversion for the 2.4 GHz ISM band.

Each supported transceiver is described by a channel grid (``f_min_mhz`` to
``f_max_mhz`` at ``step_khz`` spacing) and a linear raw-code-to-dBm law:
code 0 reads ``p_min_dbm`` and code ``raw_max`` reads ``p_max_dbm``, exactly.
Real chips have nonlinear RSSI curves; the linear law is the simplest model
that is monotone and endpoint-exact, and the vertical scale of these scanners
is relative anyway.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .errors import (
    ChannelRangeError,
    FrequencyRangeError,
    QuantizationError,
    UnknownProfileError,
)

_GRID_EPS = 1e-9


@dataclass(frozen=True)
class DeviceProfile:
    """One transceiver's tunable grid and quantization law."""

    id: str
    f_min_mhz: float
    f_max_mhz: float
    step_khz: float
    p_min_dbm: float
    p_max_dbm: float
    raw_max: int
    nominal_resolution_dbm: float

    def __post_init__(self):
        if not self.id:
            raise ValueError("profile id must be non-empty")
        if not self.f_min_mhz < self.f_max_mhz:
            raise ValueError(f"{self.id}: f_min_mhz must be below f_max_mhz")
        if not self.p_min_dbm < self.p_max_dbm:
            raise ValueError(f"{self.id}: p_min_dbm must be below p_max_dbm")
        if self.step_khz <= 0:
            raise ValueError(f"{self.id}: step_khz must be positive")
        if self.raw_max < 1:
            raise ValueError(f"{self.id}: raw_max must be at least 1")
        if self.channel_count < 2:
            raise ValueError(f"{self.id}: grid must hold at least 2 channels")

    @property
    def channel_count(self) -> int:
        span_khz = (self.f_max_mhz - self.f_min_mhz) * 1000.0
        return int(math.floor(span_khz / self.step_khz + _GRID_EPS)) + 1

    @property
    def step_mhz(self) -> float:
        return self.step_khz / 1000.0

    @property
    def dbm_per_code(self) -> float:
        return (self.p_max_dbm - self.p_min_dbm) / self.raw_max


# Step spacing is programmable on the TI parts; the others are fixed-grid.
_STEP_LIMITS_KHZ = {
    "cc2500": (58.0, 812.0),
    "cc2511": (58.0, 812.0),
}

_BUILTINS = (
    DeviceProfile("nrf24l01", 2400.0, 2525.0, 977.0, -85.0, -42.0, 43, 1.0),
    DeviceProfile("cc2500", 2400.0, 2483.5, 500.0, -104.0, -13.0, 114, 0.8),
    DeviceProfile("cc2511", 2400.0, 2483.5, 500.0, -110.0, -6.5, 207, 0.5),
    DeviceProfile("cyrf6934", 2400.0, 2483.0, 1000.0, -90.0, -40.0, 12, 4.1),
    DeviceProfile("cywusb6935", 2400.0, 2483.0, 1000.0, -95.0, -40.0, 31, 3.1),
    DeviceProfile("cyrf6936", 2400.0, 2497.0, 1000.0, -97.0, -47.0, 38, 1.3),
)

_BY_ID = {p.id: p for p in _BUILTINS}


def builtin_profiles() -> list[DeviceProfile]:
    """All six supported transceivers, in registry order."""
    return list(_BUILTINS)


def profile_by_id(profile_id: str) -> DeviceProfile:
    try:
        return _BY_ID[profile_id]
    except KeyError:
        known = ", ".join(sorted(_BY_ID))
        raise UnknownProfileError(
            f"unknown profile {profile_id!r} (known: {known})"
        ) from None


def with_step_khz(profile: DeviceProfile, step_khz: float) -> DeviceProfile:
    """Re-grid a profile whose channel spacing is programmable."""
    limits = _STEP_LIMITS_KHZ.get(profile.id)
    if limits is None:
        raise ChannelRangeError(f"{profile.id} has a fixed {profile.step_khz} kHz grid")
    lo, hi = limits
    if not lo <= step_khz <= hi:
        raise ChannelRangeError(
            f"{profile.id} spacing must be within [{lo}, {hi}] kHz, got {step_khz}"
        )
    return replace(profile, step_khz=step_khz)


def channel_to_freq(profile: DeviceProfile, ch: int) -> float:
    """Center frequency in MHz of grid channel ``ch``."""
    if not 0 <= ch < profile.channel_count:
        raise ChannelRangeError(
            f"channel {ch} outside {profile.id} grid "
            f"[0, {profile.channel_count - 1}]"
        )
    return profile.f_min_mhz + ch * profile.step_mhz


def freq_to_channel(profile: DeviceProfile, f_mhz: float) -> int:
    """Nearest grid channel for ``f_mhz``; midpoints round to the lower channel.

    Frequencies up to half a step outside the band edges snap to the edge
    channels; anything further out is rejected.
    """
    half = profile.step_mhz / 2.0
    tol = half + _GRID_EPS * profile.step_mhz
    if f_mhz < profile.f_min_mhz - tol or f_mhz > profile.f_max_mhz + tol:
        raise FrequencyRangeError(
            f"{f_mhz} MHz outside {profile.id} band "
            f"[{profile.f_min_mhz}, {profile.f_max_mhz}] MHz"
        )
    x = (f_mhz - profile.f_min_mhz) * 1000.0 / profile.step_khz
    ch = math.ceil(x - 0.5)  # halves toward the lower channel
    return min(max(ch, 0), profile.channel_count - 1)


def raw_to_dbm(profile: DeviceProfile, raw: int) -> float:
    """Power in dBm for raw code ``raw``; endpoints map exactly."""
    if not 0 <= raw <= profile.raw_max:
        raise QuantizationError(
            f"raw code {raw} outside [0, {profile.raw_max}] for {profile.id}"
        )
    if raw == profile.raw_max:
        return profile.p_max_dbm
    span = profile.p_max_dbm - profile.p_min_dbm
    return profile.p_min_dbm + (raw * span) / profile.raw_max


def dbm_to_raw(profile: DeviceProfile, p_dbm: float) -> int:
    """Quantize ``p_dbm`` to a raw code, clamping outside the power range.

    Half-codes round up, so the function is total and inverts raw_to_dbm on
    every code.
    """
    p = min(max(p_dbm, profile.p_min_dbm), profile.p_max_dbm)
    raw = math.floor((p - profile.p_min_dbm) / profile.dbm_per_code + 0.5)
    return min(max(raw, 0), profile.raw_max)


def channel_freqs(profile: DeviceProfile) -> list[float]:
    """Center frequencies of every grid channel, ascending."""
    return [profile.f_min_mhz + ch * profile.step_mhz for ch in range(profile.channel_count)]

"""Deterministic RF scene generator standing in for the hardware scanners.

An :class:`RfEnvironment` is a list of emitters plus receiver-quality
parameters. :func:`sweep` renders one frame of it onto a profile's grid:
free-space path loss per emitter, power-sum in mW, noise floor, antenna
gain, Gaussian spurious pickup, then quantization to raw codes.

Everything is a pure function of ``(env, profile, frame_index)``: per-emitter
randomness (duty activity, hop choice) comes from a counter-style stream
keyed on ``(rng_seed, hop_seed, frame_index)``, so adding an emitter never
perturbs another's sequence and replays are bit-exact.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import profiles
from .errors import EnvError, FrequencyRangeError
from .protocol import SweepFrame, frame_from_raw

EMITTER_KINDS = ("wifi", "bluetooth", "cw", "wideband_noise")

BT_HOP_LOW_MHZ = 2402.0
BT_HOP_CHANNELS = 79  # 1 MHz hops, 2402..2480
BT_BAND_CENTER_MHZ = 2441.0

WIFI_SKIRT_WIDTH_MHZ = 2.0
WIFI_SKIRT_DROP_DB = 20.0

SHIELDED_SPUR_CAP_DB = 0.5

_DEFAULT_BANDWIDTH = {"wifi": 20.0, "bluetooth": 1.0, "cw": 0.0}

# Stream tags keep emitter and spur draws on disjoint substreams.
_EMITTER_STREAM = 0x45
_SPUR_STREAM = 0x53


@dataclass(frozen=True)
class Emitter:
    kind: str
    center_mhz: float
    tx_dbm: float
    distance_m: float
    bandwidth_mhz: float = 0.0
    duty: float = 1.0
    hop_seed: int = 0

    def __post_init__(self):
        if self.kind not in EMITTER_KINDS:
            raise EnvError(f"unknown emitter kind {self.kind!r}", path="$.kind")
        if not 0.0 <= self.duty <= 1.0:
            raise EnvError(f"duty {self.duty} outside [0, 1]", path="$.duty")
        if self.distance_m <= 0:
            raise EnvError("distance_m must be positive", path="$.distance_m")
        if self.bandwidth_mhz < 0:
            raise EnvError("bandwidth_mhz must be >= 0", path="$.bandwidth_mhz")
        if self.hop_seed < 0:
            raise EnvError("hop_seed must be >= 0", path="$.hop_seed")


@dataclass(frozen=True)
class RfEnvironment:
    noise_floor_dbm: float
    rng_seed: int
    emitters: tuple[Emitter, ...] = field(default_factory=tuple)
    antenna_gain_db: float = 0.0
    shielded: bool = False
    spur_sigma_db: float = 3.0

    def __post_init__(self):
        if self.spur_sigma_db < 0:
            raise EnvError("spur_sigma_db must be >= 0", path="$.spur_sigma_db")
        if self.rng_seed < 0:
            raise EnvError("rng_seed must be >= 0", path="$.rng_seed")

    @property
    def effective_spur_sigma_db(self) -> float:
        """Shielding halves the spur pickup and caps it at 0.5 dB."""
        if self.shielded:
            return min(self.spur_sigma_db / 2.0, SHIELDED_SPUR_CAP_DB)
        return self.spur_sigma_db


def path_loss_db(f_mhz: float, d_m: float) -> float:
    """Free-space path loss: 20*log10(d_km) + 20*log10(f_mhz) + 32.44."""
    if f_mhz <= 0 or d_m <= 0:
        raise ValueError("path_loss_db needs positive frequency and distance")
    return 20.0 * math.log10(d_m / 1000.0) + 20.0 * math.log10(f_mhz) + 32.44


def _emitter_rng(rng_seed: int, emitter: Emitter, frame_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence(
        [rng_seed, _EMITTER_STREAM, emitter.hop_seed, frame_index]
    )
    return np.random.Generator(np.random.PCG64(ss))


def _spur_rng(rng_seed: int, frame_index: int) -> np.random.Generator:
    ss = np.random.SeedSequence([rng_seed, _SPUR_STREAM, frame_index])
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class _FrameState:
    active: bool
    hop_center_mhz: float | None


def _frame_state(emitter: Emitter, rng: np.random.Generator) -> _FrameState:
    # Draw order is fixed: activity first, then hop. Keeps all per-channel
    # queries within one frame consistent.
    active = bool(rng.random() < emitter.duty)
    hop = None
    if emitter.kind == "bluetooth":
        hop = BT_HOP_LOW_MHZ + float(rng.integers(0, BT_HOP_CHANNELS))
    return _FrameState(active=active, hop_center_mhz=hop)


def _received_dbm(emitter: Emitter) -> float:
    return emitter.tx_dbm - path_loss_db(emitter.center_mhz, emitter.distance_m)


def emitter_level_dbm(
    emitter: Emitter,
    f_mhz: float,
    frame_index: int,
    rng_seed: int,
    grid_step_mhz: float = 1.0,
) -> float | None:
    """Received level at ``f_mhz`` for this frame, or None when silent there.

    ``rng_seed`` is the environment seed; the per-frame activity and hop
    draws are derived from it, so repeated calls for different frequencies
    within the same frame agree.
    """
    state = _frame_state(emitter, _emitter_rng(rng_seed, emitter, frame_index))
    if not state.active:
        return None
    rx = _received_dbm(emitter)
    half = emitter.bandwidth_mhz / 2.0
    off = abs(f_mhz - emitter.center_mhz)
    if emitter.kind == "wifi":
        if off <= half:
            return rx
        if off <= half + WIFI_SKIRT_WIDTH_MHZ:
            return rx - WIFI_SKIRT_DROP_DB
        return None
    if emitter.kind == "bluetooth":
        hop_half = emitter.bandwidth_mhz / 2.0
        if abs(f_mhz - state.hop_center_mhz) <= hop_half:
            return rx
        return None
    if emitter.kind == "cw":
        if off <= grid_step_mhz / 2.0:
            return rx
        return None
    # wideband_noise
    if off <= half:
        return rx
    return None


def _emitter_mask_mw(
    emitter: Emitter,
    state: _FrameState,
    profile: profiles.DeviceProfile,
    freqs: np.ndarray,
) -> np.ndarray | None:
    """Linear-mW contribution across the grid, or None when inactive."""
    if not state.active:
        return None
    rx_mw = 10.0 ** (_received_dbm(emitter) / 10.0)
    mw = np.zeros_like(freqs)
    half = emitter.bandwidth_mhz / 2.0
    if emitter.kind == "wifi":
        off = np.abs(freqs - emitter.center_mhz)
        mw[off <= half] = rx_mw
        skirt = (off > half) & (off <= half + WIFI_SKIRT_WIDTH_MHZ)
        mw[skirt] = rx_mw * 10.0 ** (-WIFI_SKIRT_DROP_DB / 10.0)
    elif emitter.kind == "bluetooth":
        mw[np.abs(freqs - state.hop_center_mhz) <= half] = rx_mw
    elif emitter.kind == "cw":
        try:
            ch = profiles.freq_to_channel(profile, emitter.center_mhz)
        except FrequencyRangeError:
            return None
        mw[ch] = rx_mw
    else:  # wideband_noise
        mw[np.abs(freqs - emitter.center_mhz) <= half] = rx_mw
    return mw


def sweep_levels(
    env: RfEnvironment,
    profile: profiles.DeviceProfile,
    frame_index: int,
) -> np.ndarray:
    """Per-channel levels in dBm before quantization (gain and spur applied)."""
    freqs = np.asarray(profiles.channel_freqs(profile))
    total_mw = np.full(freqs.shape, 10.0 ** (env.noise_floor_dbm / 10.0))
    for emitter in env.emitters:
        rng = _emitter_rng(env.rng_seed, emitter, frame_index)
        state = _frame_state(emitter, rng)
        mw = _emitter_mask_mw(emitter, state, profile, freqs)
        if mw is not None:
            total_mw += mw
    dbm = 10.0 * np.log10(total_mw)
    dbm += env.antenna_gain_db
    sigma = env.effective_spur_sigma_db
    if sigma > 0.0:
        dbm += _spur_rng(env.rng_seed, frame_index).normal(0.0, sigma, freqs.size)
    return dbm


def sweep(
    env: RfEnvironment,
    profile: profiles.DeviceProfile,
    frame_index: int,
    t_ms: int = 0,
) -> SweepFrame:
    """Render one quantized sweep frame; seq is the frame index."""
    dbm = sweep_levels(env, profile, frame_index)
    clipped = np.clip(dbm, profile.p_min_dbm, profile.p_max_dbm)
    raw = np.floor((clipped - profile.p_min_dbm) / profile.dbm_per_code + 0.5)
    raw = np.clip(raw, 0, profile.raw_max).astype(int)
    return frame_from_raw(profile, raw.tolist(), seq=frame_index, t_ms=t_ms)


# --- environment documents ------------------------------------------------

_TOP_REQUIRED = ("noise_floor_dbm", "rng_seed", "emitters")
_TOP_OPTIONAL = ("antenna_gain_db", "shielded", "spur_sigma_db")
_EMITTER_REQUIRED = ("kind", "tx_dbm", "distance_m")
_EMITTER_OPTIONAL = ("center_mhz", "bandwidth_mhz", "duty", "hop_seed")


def _want(doc: dict, key: str, types, path: str, default=None, required=False):
    if key not in doc:
        if required:
            raise EnvError(f"missing required key {key!r}", path=path)
        return default
    value = doc[key]
    if isinstance(value, bool) and bool not in (types if isinstance(types, tuple) else (types,)):
        raise EnvError(f"{key} must be a number, got boolean", path=f"{path}.{key}")
    if not isinstance(value, types):
        raise EnvError(
            f"{key} has wrong type {type(value).__name__}", path=f"{path}.{key}"
        )
    return value


def _emitter_from_dict(doc: dict, path: str) -> Emitter:
    if not isinstance(doc, dict):
        raise EnvError("emitter must be an object", path=path)
    unknown = set(doc) - set(_EMITTER_REQUIRED) - set(_EMITTER_OPTIONAL)
    if unknown:
        raise EnvError(f"unknown keys {sorted(unknown)}", path=path)
    kind = _want(doc, "kind", str, path, required=True)
    if kind not in EMITTER_KINDS:
        raise EnvError(
            f"unknown emitter kind {kind!r} (one of {', '.join(EMITTER_KINDS)})",
            path=f"{path}.kind",
        )
    center_default = BT_BAND_CENTER_MHZ if kind == "bluetooth" else None
    center = _want(doc, "center_mhz", (int, float), path, default=center_default)
    if center is None:
        raise EnvError("missing required key 'center_mhz'", path=path)
    bandwidth = _want(
        doc, "bandwidth_mhz", (int, float), path,
        default=_DEFAULT_BANDWIDTH.get(kind),
    )
    if bandwidth is None:
        raise EnvError("wideband_noise needs an explicit bandwidth_mhz", path=path)
    duty = _want(doc, "duty", (int, float), path, default=1.0)
    if not 0.0 <= duty <= 1.0:
        raise EnvError(f"duty {duty} outside [0, 1]", path=f"{path}.duty")
    try:
        return Emitter(
            kind=kind,
            center_mhz=float(center),
            tx_dbm=float(_want(doc, "tx_dbm", (int, float), path, required=True)),
            distance_m=float(_want(doc, "distance_m", (int, float), path, required=True)),
            bandwidth_mhz=float(bandwidth),
            duty=float(duty),
            hop_seed=int(_want(doc, "hop_seed", int, path, default=0)),
        )
    except EnvError as exc:
        raise EnvError(str(exc).split(": ", 1)[-1], path=path) from None


def env_from_dict(doc: dict) -> RfEnvironment:
    if not isinstance(doc, dict):
        raise EnvError("environment must be a JSON object")
    unknown = set(doc) - set(_TOP_REQUIRED) - set(_TOP_OPTIONAL)
    if unknown:
        raise EnvError(f"unknown keys {sorted(unknown)}")
    emitters_doc = _want(doc, "emitters", list, "$", required=True)
    emitters = tuple(
        _emitter_from_dict(e, path=f"$.emitters[{i}]")
        for i, e in enumerate(emitters_doc)
    )
    return RfEnvironment(
        noise_floor_dbm=float(_want(doc, "noise_floor_dbm", (int, float), "$", required=True)),
        rng_seed=int(_want(doc, "rng_seed", int, "$", required=True)),
        emitters=emitters,
        antenna_gain_db=float(_want(doc, "antenna_gain_db", (int, float), "$", default=0.0)),
        shielded=bool(_want(doc, "shielded", bool, "$", default=False)),
        spur_sigma_db=float(_want(doc, "spur_sigma_db", (int, float), "$", default=3.0)),
    )


def load_env(text: str) -> RfEnvironment:
    """Parse and validate an environment JSON document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise EnvError(f"invalid JSON: {exc}") from None
    return env_from_dict(doc)


def load_env_file(path: str | Path) -> RfEnvironment:
    return load_env(Path(path).read_text(encoding="utf-8"))


def scene_path(name: str) -> Path:
    """Filesystem path of a shipped scene; name with or without .json."""
    if not name.endswith(".json"):
        name += ".json"
    path = Path(str(resources.files("ismscan") / "scenes" / name))
    if not path.is_file():
        raise EnvError(f"no shipped scene named {name!r}")
    return path


def list_scenes() -> list[Path]:
    scenes_dir = Path(str(resources.files("ismscan") / "scenes"))
    return sorted(scenes_dir.glob("*.json"))

"""Running spectrum statistics over a frame stream.

Per-channel accumulators (latest, peak hold, exponential moving average,
occupancy counts) plus the derived operations: occupancy fractions, Wi-Fi
channel recommendation, emitter-signature classification, and CSV export.
Levels are relative dBm straight from the quantization law; nothing here is
absolutely calibrated.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from . import profiles
from .errors import StateError, UnsupportedProfileError
from .protocol import SweepFrame

DEFAULT_ALPHA = 0.3
AUTO_THRESHOLD_WINDOW = 50
AUTO_THRESHOLD_MARGIN_DB = 10.0
AUTO_THRESHOLD_PERCENTILE = 10.0

CSV_HEADER = "freq_mhz,latest_dbm,peak_dbm,avg_dbm,occupancy"

# Wi-Fi channels 1..13 in the 2.4 GHz plan; channel 14 is out of scope here.
WIFI_CHANNELS = tuple(range(1, 14))
WIFI_SCORE_HALF_WIDTH_MHZ = 11.0

# classify() tuning
CLASSIFY_MIN_WINDOW = 50
BAND_OCCUPANCY_MIN = 0.1
WIFI_MIN_SPAN_MHZ = 10.0
NARROWBAND_MAX_SPAN_MHZ = 2.0
HOPPER_MIN_CHANNELS = 20
HOPPER_MIN_SPREAD_MHZ = 40.0
HOPPER_MAX_OCCUPANCY = 0.1
HOPPER_MIN_HITS = 2
HOPPER_MIN_PROMINENCE_DB = 6.0
SIMULTANEOUS_FRACTION = 0.6
STABLE_ACTIVE_FRACTION = 0.5


def wifi_channel_center_mhz(k: int) -> float:
    """Center of 2.4 GHz Wi-Fi channel k (1..13): 2407 + 5k MHz."""
    if k not in WIFI_CHANNELS:
        raise ValueError(f"Wi-Fi channel must be 1..13, got {k}")
    return 2407.0 + 5.0 * k


def frame_to_dbm(profile: profiles.DeviceProfile, raw) -> np.ndarray:
    """Vectorized raw-code to dBm conversion, endpoint-exact like raw_to_dbm."""
    codes = np.asarray(raw)
    span = profile.p_max_dbm - profile.p_min_dbm
    dbm = profile.p_min_dbm + (codes * span) / profile.raw_max
    return np.where(codes == profile.raw_max, profile.p_max_dbm, dbm)


@dataclass(frozen=True)
class Spectrum:
    """Immutable snapshot of the accumulators, ready for rendering/export."""

    freqs_mhz: tuple[float, ...]
    latest_dbm: tuple[float, ...]
    peak_dbm: tuple[float, ...]
    avg_dbm: tuple[float, ...]
    occupancy: tuple[float, ...]


@dataclass(frozen=True)
class EmitterLabel:
    kind: str  # wifi_like | bluetooth_like | narrowband | unknown
    band_mhz: tuple[float, float]
    confidence: float


class AnalysisState:
    """Mutable per-channel accumulators; single writer, snapshot for readers.

    With ``threshold_dbm=None`` the occupancy threshold locks itself after
    the first 50 frames at (10th percentile of all readings) + 10 dB.
    """

    def __init__(
        self,
        profile: profiles.DeviceProfile,
        alpha: float = DEFAULT_ALPHA,
        threshold_dbm: float | None = None,
    ):
        if not 0.0 < alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {alpha}")
        self.profile = profile
        self.alpha = alpha
        self.n_frames = 0
        n = profile.channel_count
        self.latest_dbm = np.full(n, profile.p_min_dbm, dtype=float)
        self.peak_dbm = np.full(n, -np.inf)
        self.avg_dbm = np.full(n, profile.p_min_dbm, dtype=float)
        self._above = np.zeros(n, dtype=np.int64)
        self._threshold = threshold_dbm
        self._auto = threshold_dbm is None
        self._auto_buffer: list[np.ndarray] | None = [] if self._auto else None

    @property
    def profile_id(self) -> str:
        return self.profile.id

    @property
    def threshold_dbm(self) -> float | None:
        """Occupancy threshold currently in force (None before any frame)."""
        if self._threshold is not None:
            return self._threshold
        return self._provisional_threshold()

    def _provisional_threshold(self) -> float | None:
        if not self._auto_buffer:
            return None
        pooled = np.concatenate(self._auto_buffer, axis=None)
        p10 = np.percentile(pooled, AUTO_THRESHOLD_PERCENTILE)
        return float(p10) + AUTO_THRESHOLD_MARGIN_DB

    @property
    def above_count(self) -> np.ndarray:
        if self._auto and self._threshold is None:
            thr = self._provisional_threshold()
            if thr is None:
                return self._above.copy()
            return sum((b > thr).astype(np.int64) for b in self._auto_buffer)
        return self._above.copy()


def update(state: AnalysisState, frame: SweepFrame) -> AnalysisState:
    """Fold one frame into the accumulators; returns the state for chaining."""
    if frame.profile_id != state.profile.id:
        raise StateError(
            f"frame profile {frame.profile_id!r} does not match "
            f"state profile {state.profile.id!r}"
        )
    latest = frame_to_dbm(state.profile, frame.raw)
    state.latest_dbm = latest
    if state.n_frames == 0:
        state.peak_dbm = latest.copy()
        state.avg_dbm = latest.copy()
    else:
        state.peak_dbm = np.maximum(state.peak_dbm, latest)
        state.avg_dbm = state.alpha * latest + (1.0 - state.alpha) * state.avg_dbm
    state.n_frames += 1
    if state._auto and state._threshold is None:
        state._auto_buffer.append(latest)
        if state.n_frames >= AUTO_THRESHOLD_WINDOW:
            state._threshold = state._provisional_threshold()
            thr = state._threshold
            for buffered in state._auto_buffer:
                state._above += buffered > thr
            state._auto_buffer = None
    else:
        state._above += latest > state._threshold
    return state


def reset_peak(state: AnalysisState) -> None:
    """Clear peak hold down to the latest trace."""
    if state.n_frames:
        state.peak_dbm = state.latest_dbm.copy()


def occupancy(state: AnalysisState) -> np.ndarray:
    """Fraction of frames per channel that exceeded the threshold."""
    if state.n_frames == 0:
        raise StateError("no frames accumulated yet")
    return state.above_count / state.n_frames


def snapshot(state: AnalysisState) -> Spectrum:
    if state.n_frames == 0:
        raise StateError("no frames accumulated yet")
    return Spectrum(
        freqs_mhz=tuple(profiles.channel_freqs(state.profile)),
        latest_dbm=tuple(state.latest_dbm.tolist()),
        peak_dbm=tuple(state.peak_dbm.tolist()),
        avg_dbm=tuple(state.avg_dbm.tolist()),
        occupancy=tuple(occupancy(state).tolist()),
    )


def recommend_wifi_channel(state: AnalysisState) -> int:
    """Least-loaded 2.4 GHz Wi-Fi channel 1..13 by accumulated average power.

    Scores are linear-mW means over the bins within +/-11 MHz of each channel
    center, so one strong emitter cannot be averaged away by quiet bins.
    Ties go to the lowest channel number.
    """
    p = state.profile
    if p.f_min_mhz > 2401.0 or p.f_max_mhz < 2483.0:
        raise UnsupportedProfileError(
            f"{p.id} band [{p.f_min_mhz}, {p.f_max_mhz}] MHz does not cover "
            "the 2401-2483 MHz Wi-Fi plan"
        )
    if state.n_frames == 0:
        raise StateError("no frames accumulated yet")
    freqs = np.asarray(profiles.channel_freqs(p))
    avg_mw = 10.0 ** (state.avg_dbm / 10.0)
    best_k, best_score = None, None
    for k in WIFI_CHANNELS:
        mask = np.abs(freqs - wifi_channel_center_mhz(k)) <= WIFI_SCORE_HALF_WIDTH_MHZ
        score = float(avg_mw[mask].mean())
        if best_score is None or score < best_score:
            best_k, best_score = k, score
    return best_k


def _runs(mask: np.ndarray):
    """Yield (lo, hi) inclusive index ranges of True runs."""
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return
    breaks = np.flatnonzero(np.diff(idx) > 1)
    lo = idx[0]
    for b in breaks:
        yield int(lo), int(idx[b])
        lo = idx[b + 1]
    yield int(lo), int(idx[-1])


def classify(
    frames: list[SweepFrame],
    profile: profiles.DeviceProfile | None = None,
    threshold_dbm: float | None = None,
) -> list[EmitterLabel]:
    """Label emitter signatures in a window of recent frames.

    Contiguous channels occupied more than 10% of the window form bands:
    a band wider than 10 MHz whose channels light up together is wifi_like,
    a stable band no wider than 2 MHz is narrowband, anything else is
    unknown. Twenty or more narrow transiently-hit channels (occupancy under
    10%) spread over at least 40 MHz are one bluetooth_like hopper.
    """
    if len(frames) < CLASSIFY_MIN_WINDOW:
        raise StateError(
            f"classification window too small: need >= {CLASSIFY_MIN_WINDOW} "
            f"frames, got {len(frames)}"
        )
    if profile is None:
        profile = profiles.profile_by_id(frames[0].profile_id)
    for f in frames:
        if f.profile_id != profile.id:
            raise StateError(
                f"mixed profiles in window: {f.profile_id!r} vs {profile.id!r}"
            )
    dbm = frame_to_dbm(profile, np.array([f.raw for f in frames]))
    if threshold_dbm is None:
        threshold_dbm = float(
            np.percentile(dbm, AUTO_THRESHOLD_PERCENTILE)
        ) + AUTO_THRESHOLD_MARGIN_DB
    hits = dbm > threshold_dbm
    occ = hits.mean(axis=0)
    freqs = np.asarray(profiles.channel_freqs(profile))
    half_step = profile.step_mhz / 2.0

    labels: list[EmitterLabel] = []
    in_band = occ > BAND_OCCUPANCY_MIN
    for lo, hi in _runs(in_band):
        span = freqs[hi] - freqs[lo] + profile.step_mhz
        seg = hits[:, lo : hi + 1]
        any_active = seg.any(axis=1)
        simultaneous = seg.mean(axis=1) >= SIMULTANEOUS_FRACTION
        n_active = int(any_active.sum())
        stable = (
            n_active > 0
            and float(simultaneous[any_active].mean()) >= STABLE_ACTIVE_FRACTION
        )
        confidence = float((~any_active | simultaneous).mean())
        band = (float(freqs[lo] - half_step), float(freqs[hi] + half_step))
        if span > WIFI_MIN_SPAN_MHZ and stable:
            kind = "wifi_like"
        elif span <= NARROWBAND_MAX_SPAN_MHZ and stable:
            kind = "narrowband"
        else:
            kind = "unknown"
        labels.append(EmitterLabel(kind=kind, band_mhz=band, confidence=confidence))

    # Hop spikes sit well above the threshold; spur pickup barely crosses it.
    peaks = dbm.max(axis=0)
    transient = (
        ~in_band
        & (occ > 0.0)
        & (occ < HOPPER_MAX_OCCUPANCY)
        & (hits.sum(axis=0) >= HOPPER_MIN_HITS)
        & (peaks >= threshold_dbm + HOPPER_MIN_PROMINENCE_DB)
    )
    idx = np.flatnonzero(transient)
    if (
        idx.size >= HOPPER_MIN_CHANNELS
        and freqs[idx[-1]] - freqs[idx[0]] >= HOPPER_MIN_SPREAD_MHZ
    ):
        hops_per_frame = hits[:, idx].sum(axis=1)
        confidence = float((hops_per_frame <= 2).mean())
        labels.append(
            EmitterLabel(
                kind="bluetooth_like",
                band_mhz=(float(freqs[idx[0]] - half_step), float(freqs[idx[-1]] + half_step)),
                confidence=confidence,
            )
        )

    labels.sort(key=lambda label: label.band_mhz[0])
    return labels


def export_csv(state: AnalysisState) -> str:
    """CSV of the current snapshot: fixed header, 2-decimal numbers, LF."""
    spec = snapshot(state)
    lines = [CSV_HEADER]
    for f, latest, peak, avg, occ in zip(
        spec.freqs_mhz, spec.latest_dbm, spec.peak_dbm, spec.avg_dbm, spec.occupancy
    ):
        lines.append(f"{f:.2f},{latest:.2f},{peak:.2f},{avg:.2f},{occ:.2f}")
    return "\n".join(lines) + "\n"


def import_csv(text: str) -> Spectrum:
    """Read an export back; inverse of export_csv up to formatting precision."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise StateError("empty CSV") from None
    if header != CSV_HEADER.split(","):
        raise StateError(f"unexpected CSV header: {','.join(header)!r}")
    cols: list[list[float]] = [[], [], [], [], []]
    for row in reader:
        if not row:
            continue
        if len(row) != 5:
            raise StateError(f"expected 5 columns, got {len(row)}")
        for col, cell in zip(cols, row):
            col.append(float(cell))
    return Spectrum(
        freqs_mhz=tuple(cols[0]),
        latest_dbm=tuple(cols[1]),
        peak_dbm=tuple(cols[2]),
        avg_dbm=tuple(cols[3]),
        occupancy=tuple(cols[4]),
    )

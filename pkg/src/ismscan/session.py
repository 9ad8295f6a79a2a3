"""Acquisition sessions: simulated, replayed, or serial sources feeding sinks.

A session pulls frames from one source and pushes each of them to every
sink callable. Logs are JSONL: one header record ``{profile_id, started_at}``
followed by one record per frame with the wire line embedded as a string,
append-only and replayable bit-exactly.

:class:`AcquisitionEngine` owns at most one live session at a time, keeps the
running analysis state, and fans frames out to subscribers through bounded
queues -- a stalled consumer is dropped, never allowed to stall acquisition.
"""

from __future__ import annotations

import json
import queue
import threading
import time
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

from . import analysis, profiles, simulator
from .errors import (
    ConfigError,
    ConflictError,
    IsmScanError,
    ScannerNotFoundError,
    StateError,
)
from .protocol import (
    STATUS_NOT_FOUND,
    SweepFrame,
    connection_status,
    decode_frame,
    encode_frame,
    handshake,
)

SOURCES = ("sim", "replay", "serial")
MAX_RATE_HZ = 100.0
DEFAULT_RATE_HZ = 10.0
DEFAULT_QUEUE_SIZE = 256

# Simulated data is wall-clock independent; a fixed header timestamp keeps
# recorded logs byte-identical across runs with the same seed.
SIM_STARTED_AT = "1970-01-01T00:00:00+00:00"

FrameSink = Callable[[SweepFrame], None]

_CFG_KEYS = ("source", "profile_id", "env_path", "log_path", "port", "rate_hz", "duration_s")
_REQUIRED_BY_SOURCE = {
    "sim": ("profile_id", "env_path"),
    "replay": ("log_path",),
    "serial": ("port",),
}


@dataclass(frozen=True)
class SessionConfig:
    source: str
    profile_id: str | None = None
    env_path: str | None = None
    log_path: str | None = None
    port: str | None = None
    rate_hz: float = DEFAULT_RATE_HZ
    duration_s: float | None = None

    def validate(self) -> None:
        if self.source not in SOURCES:
            raise ConfigError(f"source must be one of {SOURCES}, got {self.source!r}")
        if not 0.0 < self.rate_hz <= MAX_RATE_HZ:
            raise ConfigError(f"rate_hz must be in (0, {MAX_RATE_HZ:g}], got {self.rate_hz}")
        if self.duration_s is not None and self.duration_s <= 0:
            raise ConfigError(f"duration_s must be positive, got {self.duration_s}")
        required = _REQUIRED_BY_SOURCE[self.source]
        for name in ("profile_id", "env_path", "log_path", "port"):
            value = getattr(self, name)
            if name in required and value is None:
                raise ConfigError(f"source {self.source!r} requires {name}")
            if name not in required and value is not None:
                raise ConfigError(f"source {self.source!r} does not take {name}")

    @classmethod
    def from_dict(cls, doc: dict) -> "SessionConfig":
        if not isinstance(doc, dict):
            raise ConfigError("session config must be a JSON object")
        unknown = set(doc) - set(_CFG_KEYS)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        if "source" not in doc:
            raise ConfigError("session config requires 'source'")
        kwargs = dict(doc)
        if "rate_hz" in kwargs and kwargs["rate_hz"] is not None:
            kwargs["rate_hz"] = float(kwargs["rate_hz"])
        else:
            kwargs.pop("rate_hz", None)
        if "duration_s" in kwargs and kwargs["duration_s"] is not None:
            kwargs["duration_s"] = float(kwargs["duration_s"])
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg


@dataclass
class SessionStatus:
    state: str = "idle"  # idle | running | stopped | error
    device_status: str = ""
    frames_emitted: int = 0

    def as_dict(self) -> dict:
        return {
            "state": self.state,
            "device_status": self.device_status,
            "frames_emitted": self.frames_emitted,
        }


@dataclass
class SessionLog:
    """Ordered, replayable record of one session."""

    profile_id: str
    started_at: str
    frames: list[SweepFrame] = field(default_factory=list)

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(json.dumps({"profile_id": self.profile_id, "started_at": self.started_at}) + "\n")
            for frame in self.frames:
                line = encode_frame(frame).decode("ascii").rstrip("\n")
                fh.write(json.dumps({"frame": line}) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "SessionLog":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"session log not found: {path}")
        frames: list[SweepFrame] = []
        header: dict | None = None
        with open(path, "r", encoding="ascii") as fh:
            for lineno, raw_line in enumerate(fh, start=1):
                raw_line = raw_line.strip()
                if not raw_line:
                    continue
                try:
                    record = json.loads(raw_line)
                except json.JSONDecodeError as exc:
                    raise ConfigError(f"{path}:{lineno}: invalid JSON: {exc}") from None
                if header is None:
                    if "profile_id" not in record or "started_at" not in record:
                        raise ConfigError(f"{path}:1: first record must be the session header")
                    header = record
                    continue
                if "frame" not in record:
                    raise ConfigError(f"{path}:{lineno}: record is missing 'frame'")
                frames.append(decode_frame(record["frame"]))
        if header is None:
            raise ConfigError(f"{path}: empty session log")
        return cls(profile_id=header["profile_id"], started_at=header["started_at"], frames=frames)


class JsonlLogWriter:
    """Streaming frame sink: appends one record per frame, header first."""

    def __init__(self, path: str | Path, started_at: str | None = None):
        self._path = Path(path)
        self._started_at = started_at or _utc_now()
        self._fh = None

    def __call__(self, frame: SweepFrame) -> None:
        if self._fh is None:
            self._fh = open(self._path, "w", encoding="ascii")
            header = {"profile_id": frame.profile_id, "started_at": self._started_at}
            self._fh.write(json.dumps(header) + "\n")
        line = encode_frame(frame).decode("ascii").rstrip("\n")
        self._fh.write(json.dumps({"frame": line}) + "\n")
        self._fh.flush()

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __enter__(self) -> "JsonlLogWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def open_serial_transport(port: str, baudrate: int = 115200):
    """Open a real serial port; requires pyserial at runtime."""
    try:
        import serial  # noqa: PLC0415 -- optional dependency
    except ImportError:
        raise ConfigError(
            "serial sources need pyserial (pip install pyserial) or an "
            "injected transport"
        ) from None

    class _SerialTransport:
        def __init__(self):
            self._ser = serial.Serial(port, baudrate=baudrate, timeout=0.1)

        def write(self, data: bytes) -> None:
            self._ser.write(data)

        def readline(self, timeout_s: float) -> bytes:
            self._ser.timeout = timeout_s
            return self._ser.readline()

    return _SerialTransport()


def run_session(
    cfg: SessionConfig,
    sinks: list[FrameSink],
    *,
    on_status: Callable[[str], None] | None = None,
    stop_event: threading.Event | None = None,
    replay_max_speed: bool = True,
    transport_factory=None,
    handshake_timeout_ms: int = 2000,
    env: simulator.RfEnvironment | None = None,
    clock=time.monotonic,
    sleep=time.sleep,
) -> SessionLog:
    """Run one acquisition session to completion; returns the in-memory log.

    ``env`` overrides the file at cfg.env_path (seed experiments); replay
    timing is logged-paced unless ``replay_max_speed``. Raises
    ScannerNotFoundError when a serial source fails its handshake.
    """
    cfg.validate()
    stop = stop_event if stop_event is not None else threading.Event()

    def notify(status: str) -> None:
        if on_status is not None:
            on_status(status)

    if cfg.source == "sim":
        return _run_sim(cfg, sinks, stop, env, clock, sleep)
    if cfg.source == "replay":
        return _run_replay(cfg, sinks, stop, replay_max_speed, sleep)
    return _run_serial(
        cfg, sinks, stop, notify, transport_factory, handshake_timeout_ms, clock
    )


def _emit(frame: SweepFrame, log: SessionLog, sinks: list[FrameSink]) -> None:
    log.frames.append(frame)
    for sink in sinks:
        sink(frame)


def _pace(deadline: float, stop: threading.Event, clock, sleep) -> None:
    while not stop.is_set():
        now = clock()
        if now >= deadline:
            return
        sleep(min(deadline - now, 0.05))


def _run_sim(cfg, sinks, stop, env, clock, sleep) -> SessionLog:
    if env is None:
        env_path = Path(cfg.env_path)
        if not env_path.is_file():
            raise ConfigError(f"environment file not found: {env_path}")
        env = simulator.load_env_file(env_path)
    profile = profiles.profile_by_id(cfg.profile_id)
    log = SessionLog(profile_id=profile.id, started_at=SIM_STARTED_AT)
    period = 1.0 / cfg.rate_hz
    start = clock()
    i = 0
    while not stop.is_set():
        scheduled_s = i * period
        if cfg.duration_s is not None and scheduled_s >= cfg.duration_s:
            break
        # Stamp the scheduled offset, not wall time: sweeps are deterministic
        # functions of the frame index, logs must be too.
        frame = simulator.sweep(env, profile, i, t_ms=round(scheduled_s * 1000.0))
        _emit(frame, log, sinks)
        i += 1
        _pace(start + i * period, stop, clock, sleep)
    return log


def _run_replay(cfg, sinks, stop, max_speed, sleep) -> SessionLog:
    source = SessionLog.load(cfg.log_path)
    log = SessionLog(profile_id=source.profile_id, started_at=source.started_at)
    prev_t_ms: int | None = None
    for frame in source.frames:
        if stop.is_set():
            break
        if cfg.duration_s is not None and frame.t_ms / 1000.0 > cfg.duration_s:
            break
        if not max_speed and prev_t_ms is not None and frame.t_ms > prev_t_ms:
            remaining = (frame.t_ms - prev_t_ms) / 1000.0
            while remaining > 0 and not stop.is_set():
                step = min(remaining, 0.05)
                sleep(step)
                remaining -= step
        prev_t_ms = frame.t_ms
        _emit(frame, log, sinks)
    return log


def _run_serial(cfg, sinks, stop, notify, transport_factory, timeout_ms, clock) -> SessionLog:
    factory = transport_factory or open_serial_transport
    transport = factory(cfg.port)
    identity = handshake(transport, timeout_ms=timeout_ms)
    if identity is None:
        notify(STATUS_NOT_FOUND)
        raise ScannerNotFoundError(STATUS_NOT_FOUND)
    notify(connection_status(identity))
    log = SessionLog(profile_id=identity.profile_id, started_at=_utc_now())
    start = clock()
    misses = 0
    while not stop.is_set():
        if cfg.duration_s is not None and clock() - start >= cfg.duration_s:
            break
        line = transport.readline(0.5)
        if not line:
            misses += 1
            if misses >= 5:  # stream went quiet; treat as source exhaustion
                break
            continue
        misses = 0
        _emit(decode_frame(line), log, sinks)
    return log


@dataclass
class Subscriber:
    """One stream consumer with its bounded frame queue."""

    queue: "queue.Queue[tuple[str, object]]"
    dropped: bool = False


class AcquisitionEngine:
    """At most one live session; analysis state plus bounded fan-out."""

    def __init__(self, *, queue_size: int = DEFAULT_QUEUE_SIZE, transport_factory=None):
        self._queue_size = queue_size
        self._transport_factory = transport_factory
        self._lock = threading.Lock()
        self._thread: threading.Thread | None = None
        self._stop = threading.Event()
        self._status = SessionStatus()
        self._state: analysis.AnalysisState | None = None
        self._subscribers: list[Subscriber] = []

    # -- control ------------------------------------------------------------

    def start(self, cfg: SessionConfig) -> None:
        cfg.validate()
        env = None
        if cfg.source == "sim":
            env_path = Path(cfg.env_path)
            if not env_path.is_file():
                raise ConfigError(f"environment file not found: {env_path}")
            env = simulator.load_env_file(env_path)  # fail fast, not in-thread
            profiles.profile_by_id(cfg.profile_id)
        elif cfg.source == "replay":
            SessionLog.load(cfg.log_path)
        with self._lock:
            if self._thread is not None and self._thread.is_alive():
                raise ConflictError("a session is already running")
            self._stop = threading.Event()
            self._status = SessionStatus(state="running")
            self._state = None
            thread = threading.Thread(
                target=self._run, args=(cfg, env), name="ismscan-acquisition", daemon=True
            )
            self._thread = thread
        self._broadcast_status()
        thread.start()

    def stop(self, timeout_s: float = 5.0) -> None:
        with self._lock:
            thread = self._thread
            self._stop.set()
        if thread is not None:
            thread.join(timeout_s)

    def _run(self, cfg: SessionConfig, env) -> None:
        final = "stopped"
        try:
            run_session(
                cfg,
                [self._handle_frame],
                on_status=self._handle_device_status,
                stop_event=self._stop,
                replay_max_speed=False,
                transport_factory=self._transport_factory,
                env=env,
            )
        except IsmScanError as exc:
            final = "error"
            if not isinstance(exc, ScannerNotFoundError):
                self._handle_device_status(str(exc))
        with self._lock:
            self._status.state = final
        self._broadcast_status()

    # -- session callbacks ----------------------------------------------------

    def _handle_device_status(self, status: str) -> None:
        with self._lock:
            self._status.device_status = status
        self._broadcast_status()

    def _handle_frame(self, frame: SweepFrame) -> None:
        with self._lock:
            if self._state is None or self._state.profile.id != frame.profile_id:
                self._state = analysis.AnalysisState(profiles.profile_by_id(frame.profile_id))
            analysis.update(self._state, frame)
            self._status.frames_emitted += 1
            subscribers = list(self._subscribers)
        self._fanout(("frame", frame), subscribers)

    def _broadcast_status(self) -> None:
        with self._lock:
            status = replace(self._status)
            subscribers = list(self._subscribers)
        self._fanout(("status", status), subscribers)

    def _fanout(self, item: tuple[str, object], subscribers: list[Subscriber]) -> None:
        for sub in subscribers:
            try:
                sub.queue.put_nowait(item)
            except queue.Full:
                # Slow consumer: cut it loose rather than stalling the session.
                sub.dropped = True
                self.unsubscribe(sub)

    # -- read side ------------------------------------------------------------

    def subscribe(self) -> Subscriber:
        sub = Subscriber(queue=queue.Queue(maxsize=self._queue_size))
        with self._lock:
            status = replace(self._status)
            self._subscribers.append(sub)
        sub.queue.put_nowait(("status", status))
        return sub

    def unsubscribe(self, sub: Subscriber) -> None:
        with self._lock:
            if sub in self._subscribers:
                self._subscribers.remove(sub)

    def status(self) -> SessionStatus:
        with self._lock:
            return replace(self._status)

    def spectrum(self) -> analysis.Spectrum:
        with self._lock:
            if self._state is None or self._state.n_frames == 0:
                raise StateError("no spectrum data yet")
            return analysis.snapshot(self._state)

    def export_csv(self) -> str:
        with self._lock:
            if self._state is None or self._state.n_frames == 0:
                raise StateError("no spectrum data yet")
            return analysis.export_csv(self._state)

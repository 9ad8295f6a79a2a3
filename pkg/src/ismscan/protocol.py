"""Wire protocol for sweep frames: LPT text dumps, framed lines, handshake.

Two text formats are understood:

* LPT dump blocks, ``frame: [v0,v1,...,]`` -- raw per-channel RSSI lists as
  read straight off the parallel-port scanner. Trailing commas and embedded
  whitespace/newlines are legal on input.
* The framed line protocol used between host and scanner (real or simulated):
  one ASCII line per sweep, ``F <seq> <t_ms> <profile_id> <raw0>,...,<rawN-1>``,
  newline-terminated, no trailing comma.

The handshake is a single request/reply: host sends ``ID?``, a conforming
device answers ``ID <name>;<profile_id>;<firmware>``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Protocol, Sequence

from . import profiles
from .errors import (
    FrameShapeError,
    FrameValueError,
    ParseError,
    ProtocolError,
)

STATUS_NOT_FOUND = "Scanner not found"
HANDSHAKE_REQUEST = b"ID?\n"
DEFAULT_HANDSHAKE_TIMEOUT_MS = 2000

_INT_RE = re.compile(r"-?\d+")
_FRAME_MARKER_RE = re.compile(r"frame\s*:")


@dataclass(frozen=True)
class SweepFrame:
    """One full sweep across a profile's grid."""

    seq: int
    t_ms: int
    profile_id: str
    raw: tuple[int, ...]


@dataclass(frozen=True)
class DeviceIdentity:
    name: str
    profile_id: str
    firmware: str

    def __post_init__(self):
        if not self.name:
            raise ProtocolError("device name must be non-empty")


class Transport(Protocol):
    """Byte-stream abstraction a scanner sits behind.

    ``readline`` blocks for at most ``timeout_s`` and returns one complete
    line (with or without the newline), or ``b""`` on timeout/closed stream.
    """

    def write(self, data: bytes) -> None: ...

    def readline(self, timeout_s: float) -> bytes: ...


def _scan_values(text: str, pos: int) -> tuple[list[int], int]:
    """Parse one bracketed integer list starting at or after ``pos``."""
    n = len(text)
    i = pos
    while i < n and text[i].isspace():
        i += 1
    if i >= n or text[i] != "[":
        raise ParseError("expected '[' after 'frame:'", offset=i)
    i += 1
    values: list[int] = []
    while True:
        while i < n and text[i].isspace():
            i += 1
        if i >= n:
            raise ParseError("unterminated frame list", offset=n)
        if text[i] == "]":
            if not values:
                raise ParseError("empty frame list", offset=i)
            return values, i + 1
        m = _INT_RE.match(text, i)
        if not m:
            raise ParseError(f"expected integer, found {text[i]!r}", offset=i)
        values.append(int(m.group()))
        i = m.end()
        while i < n and text[i].isspace():
            i += 1
        if i >= n:
            raise ParseError("unterminated frame list", offset=n)
        if text[i] == ",":
            i += 1
        elif text[i] == "]":
            return values, i + 1
        else:
            raise ParseError("expected ',' or ']' after value", offset=i)


def iter_lpt_frames(text: str) -> Iterator[list[int]]:
    """Yield the value list of every ``frame: [...]`` block in ``text``."""
    pos = 0
    while True:
        m = _FRAME_MARKER_RE.search(text, pos)
        if m is None:
            return
        values, pos = _scan_values(text, m.end())
        yield values


def parse_lpt_frame(text: str) -> list[int]:
    """Parse the first ``frame: [...]`` block in an LPT dump."""
    m = _FRAME_MARKER_RE.search(text)
    if m is None:
        raise ParseError("no 'frame:' marker found", offset=0)
    values, _ = _scan_values(text, m.end())
    return values


def frame_from_raw(
    profile: profiles.DeviceProfile,
    raw: Sequence[int],
    seq: int,
    t_ms: int,
) -> SweepFrame:
    """Validate raw values against ``profile`` and build a SweepFrame."""
    if len(raw) != profile.channel_count:
        raise FrameShapeError(
            f"expected {profile.channel_count} channels for {profile.id}, "
            f"got {len(raw)}"
        )
    for i, v in enumerate(raw):
        if not 0 <= v <= profile.raw_max:
            raise FrameValueError(
                f"raw value {v} at index {i} outside [0, {profile.raw_max}] "
                f"for {profile.id}",
                index=i,
            )
    return SweepFrame(seq=seq, t_ms=t_ms, profile_id=profile.id, raw=tuple(raw))


def encode_frame(frame: SweepFrame) -> bytes:
    """One ASCII line: ``F <seq> <t_ms> <profile_id> <raw CSV>\\n``."""
    csv = ",".join(str(v) for v in frame.raw)
    return f"F {frame.seq} {frame.t_ms} {frame.profile_id} {csv}\n".encode("ascii")


def decode_frame(line: bytes | str) -> SweepFrame:
    """Inverse of encode_frame; validates against the named builtin profile."""
    text = line.decode("ascii", errors="replace") if isinstance(line, bytes) else line
    text = text.strip()
    parts = text.split(" ")
    if len(parts) != 5 or parts[0] != "F":
        raise ParseError(f"malformed frame line ({len(parts)} fields)", offset=0)
    try:
        seq = int(parts[1])
        t_ms = int(parts[2])
    except ValueError:
        raise ParseError("seq and t_ms must be integers", offset=2) from None
    if seq < 0 or t_ms < 0:
        raise ParseError("seq and t_ms must be non-negative", offset=2)
    profile = profiles.profile_by_id(parts[3])
    try:
        raw = [int(v) for v in parts[4].split(",")]
    except ValueError:
        raise ParseError("non-integer raw value", offset=text.find(parts[4])) from None
    return frame_from_raw(profile, raw, seq=seq, t_ms=t_ms)


def _parse_identity(line: bytes) -> DeviceIdentity:
    text = line.decode("ascii", errors="replace").strip()
    if not text.startswith("ID "):
        raise ProtocolError(f"unexpected handshake reply: {text!r}")
    fields = text[3:].split(";")
    if len(fields) != 3:
        raise ProtocolError(
            f"handshake reply must carry name;profile;firmware, got {text!r}"
        )
    name, profile_id, firmware = (f.strip() for f in fields)
    if not name:
        raise ProtocolError("handshake reply has an empty device name")
    return DeviceIdentity(name=name, profile_id=profile_id, firmware=firmware)


def handshake(
    transport: Transport,
    timeout_ms: int = DEFAULT_HANDSHAKE_TIMEOUT_MS,
) -> DeviceIdentity | None:
    """Ask the device to identify itself.

    Returns the identity, or None when nothing answered (after one retry).
    A reply that arrives but does not parse raises ProtocolError -- a present
    but misbehaving device is a different failure than an absent one.
    """
    for _ in range(2):
        transport.write(HANDSHAKE_REQUEST)
        line = transport.readline(timeout_ms / 1000.0)
        if line:
            return _parse_identity(line)
    return None


def connection_status(identity: DeviceIdentity | None) -> str:
    """Operator-facing status string for a handshake outcome."""
    if identity is None:
        return STATUS_NOT_FOUND
    return f"Connected to {identity.name}"

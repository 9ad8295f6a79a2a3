"""In-memory transports standing in for serial scanners."""

import time
from collections import deque

from ismscan.protocol import HANDSHAKE_REQUEST


class SilentTransport:
    """Never answers; every read times out."""

    def __init__(self):
        self.requests = []

    def write(self, data: bytes) -> None:
        self.requests.append(data)

    def readline(self, timeout_s: float) -> bytes:
        time.sleep(min(timeout_s, 0.005))
        return b""


class ScriptedTransport:
    """Pops one canned reply per read; b"" entries simulate timeouts."""

    def __init__(self, replies):
        self.replies = deque(replies)
        self.requests = []

    def write(self, data: bytes) -> None:
        self.requests.append(data)

    def readline(self, timeout_s: float) -> bytes:
        if self.replies:
            return self.replies.popleft()
        return b""


class MockScannerTransport:
    """Handshake-conforming device that then streams canned frame lines."""

    def __init__(self, identity_line: bytes, frame_lines=()):
        self.identity_line = identity_line
        self._pending = deque()
        self._frames = deque(frame_lines)
        self.requests = []

    def write(self, data: bytes) -> None:
        self.requests.append(data)
        if data == HANDSHAKE_REQUEST:
            self._pending.append(self.identity_line)

    def readline(self, timeout_s: float) -> bytes:
        if self._pending:
            return self._pending.popleft()
        if self._frames:
            return self._frames.popleft()
        return b""

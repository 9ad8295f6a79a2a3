"""Exception types shared across the suite."""


class IsmScanError(Exception):
    """Base class for every error this package raises on purpose."""


class ChannelRangeError(IsmScanError):
    """Channel index outside a profile's grid."""


class FrequencyRangeError(IsmScanError):
    """Frequency outside a profile's band (plus half-step tolerance)."""


class QuantizationError(IsmScanError):
    """Raw RSSI code outside [0, raw_max]."""


class UnknownProfileError(IsmScanError):
    """Profile id not in the builtin registry."""


class ParseError(IsmScanError):
    """Malformed text input; carries the character offset of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class FrameShapeError(IsmScanError):
    """Frame length does not match the profile's channel count."""


class FrameValueError(IsmScanError):
    """A frame value is out of range; carries the offending index."""

    def __init__(self, message: str, index: int):
        super().__init__(message)
        self.index = index


class ProtocolError(IsmScanError):
    """Device answered the handshake with something unparseable."""


class ScannerNotFoundError(IsmScanError):
    """No device answered the handshake."""


class EnvError(IsmScanError):
    """Invalid environment document; carries a JSON path to the problem."""

    def __init__(self, message: str, path: str = "$"):
        super().__init__(f"{path}: {message}")
        self.path = path


class ConfigError(IsmScanError):
    """Invalid session configuration."""


class StateError(IsmScanError):
    """Operation not valid for the current analysis/session state."""


class ConflictError(IsmScanError):
    """A session is already running."""


class UnsupportedProfileError(IsmScanError):
    """Profile band too narrow for the requested operation."""

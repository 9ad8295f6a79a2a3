"""Software spectrum-analyzer suite for the 2.4-2.5 GHz ISM band.

Device profiles for six low-cost transceivers, a sweep-frame wire protocol,
an RF environment simulator, running spectrum analysis, an acquisition
service with live streaming, and a CLI.
"""

from .analysis import AnalysisState, EmitterLabel, Spectrum
from .errors import IsmScanError
from .profiles import DeviceProfile, builtin_profiles, profile_by_id
from .protocol import DeviceIdentity, SweepFrame
from .session import AcquisitionEngine, SessionConfig, SessionLog, SessionStatus
from .simulator import Emitter, RfEnvironment

__version__ = "0.1.0"

__all__ = [
    "AcquisitionEngine",
    "AnalysisState",
    "DeviceIdentity",
    "DeviceProfile",
    "Emitter",
    "EmitterLabel",
    "IsmScanError",
    "RfEnvironment",
    "SessionConfig",
    "SessionLog",
    "SessionStatus",
    "Spectrum",
    "SweepFrame",
    "builtin_profiles",
    "profile_by_id",
    "__version__",
]

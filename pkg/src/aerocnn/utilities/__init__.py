from .logger import RemoteLogHandler, setup_logging
from .manifest import COLUMNS, SPLITS, Manifest, ManifestError, SampleRecord, read_manifest, write_manifest
from .timing import PhaseTimer

__all__ = [
    "COLUMNS",
    "Manifest",
    "ManifestError",
    "PhaseTimer",
    "RemoteLogHandler",
    "SPLITS",
    "SampleRecord",
    "read_manifest",
    "setup_logging",
    "write_manifest",
]

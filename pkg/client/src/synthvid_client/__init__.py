"""Thin training-side client for synthvid video streams and on-disk datasets.

Deliberately independent of the generator package: it speaks the wire
protocol and parses the file formats from their specifications only, so any
byte it returns is a cross-implementation conformance check.
"""

__version__ = "0.1.0"

from .client import Batch, ConfigMismatch, Session, Shard, StreamClosed, batches, connect, shard_index
from .svid import DiskDataset, Video, load_manifest, parse_video_bytes, read_video_file
from .wire import ProtocolError, canonical_config_hash

__all__ = [
    "Batch",
    "ConfigMismatch",
    "DiskDataset",
    "ProtocolError",
    "Session",
    "Shard",
    "StreamClosed",
    "Video",
    "batches",
    "canonical_config_hash",
    "connect",
    "load_manifest",
    "parse_video_bytes",
    "read_video_file",
    "shard_index",
    "__version__",
]

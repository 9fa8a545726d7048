"""Wire framing for the stream protocol (see the server's docs/protocol.md).

Frame: "SVST" | u8 type | u32 LE body length | body.
"""

from __future__ import annotations

import hashlib
import json
import struct

MAGIC = b"SVST"
PROTOCOL_VERSION = 1

HELLO = 1
HELLO_ACK = 2
GET = 3
VIDEO = 4
ERR = 5
BYE = 6

ERR_UNKNOWN_TYPE = 1
ERR_CONFIG_MISMATCH = 2
ERR_MALFORMED = 3
ERR_BATCH_LIMIT = 4

_HEAD = struct.Struct("<4sBI")


class ProtocolError(Exception):
    pass


def encode(mtype: int, body: bytes = b"") -> bytes:
    return _HEAD.pack(MAGIC, mtype, len(body)) + body


def hello(config_hash: str) -> bytes:
    return encode(HELLO, struct.pack("<H", PROTOCOL_VERSION) + config_hash.encode("ascii"))


def get(start: int, count: int) -> bytes:
    return encode(GET, struct.pack("<QI", start, count))


def bye() -> bytes:
    return encode(BYE)


def read_exact(rfile, n: int) -> bytes:
    buf = b""
    while len(buf) < n:
        chunk = rfile.read(n - len(buf))
        if not chunk:
            raise EOFError("connection closed")
        buf += chunk
    return buf


def read_message(rfile) -> tuple[int, bytes]:
    magic, mtype, length = _HEAD.unpack(read_exact(rfile, _HEAD.size))
    if magic != MAGIC:
        raise ProtocolError(f"bad frame magic {magic!r}")
    return mtype, read_exact(rfile, length)


def parse_err(body: bytes) -> tuple[int, str]:
    (code,) = struct.unpack_from("<H", body)
    return code, body[2:].decode("utf-8", errors="replace")


def parse_video(body: bytes) -> tuple[int, bytes]:
    (index,) = struct.unpack_from("<Q", body)
    return index, body[8:]


def canonical_config_hash(config: dict) -> str:
    """Hash of a fully resolved config dict: sha256 over its JSON form with
    sorted keys and compact separators. Matches the hash the server expects
    in HELLO (and prints via `synthvid hash`)."""
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

"""TCP streaming of deterministically generated videos to training workers.

Wire format (little-endian throughout; see docs/protocol.md for hex traces):
    frame   = "SVST" | u8 type | u32 body_len | body
    HELLO     (1, client)  u16 protocol version | config-hash text (utf-8)
    HELLO_ACK (2, server)  resolved config JSON (utf-8)
    GET       (3, client)  u64 start index | u32 count
    VIDEO     (4, server)  u64 index | .svid container bytes
    ERR       (5, server)  u16 code | utf-8 message
    BYE       (6, client)  empty

VIDEO payloads are produced by the same serializer the disk pipeline uses,
so byte equality with generate_dataset output is structural, not tested-in.
The protocol is pull-based: the client paces itself with GET, and the server
renders one video at a time per connection -- nothing is buffered beyond the
frame being sent, and GET count is capped by --max-batch.
"""

from __future__ import annotations

import socket
import socketserver
import struct
import threading
from dataclasses import dataclass

from .config import GeneratorConfig, config_hash, validate_config
from .dataset_io import synthesize_video, video_file_bytes
from .textures import PoolSet

WIRE_MAGIC = b"SVST"
PROTOCOL_VERSION = 1

MSG_HELLO = 1
MSG_HELLO_ACK = 2
MSG_GET = 3
MSG_VIDEO = 4
MSG_ERR = 5
MSG_BYE = 6

ERR_UNKNOWN_TYPE = 1
ERR_CONFIG_MISMATCH = 2
ERR_MALFORMED = 3
ERR_BATCH_LIMIT = 4

DEFAULT_MAX_BATCH = 8

_FRAME_HEAD = struct.Struct("<4sBI")


class ProtocolError(Exception):
    pass


@dataclass(frozen=True)
class ShardSpec:
    """Deterministic partition of the video index sequence across workers."""

    worker_id: int
    worker_count: int

    def __post_init__(self):
        if not (0 <= self.worker_id < self.worker_count):
            raise ValueError(f"need 0 <= id < count, got id={self.worker_id} "
                             f"count={self.worker_count}")


def shard_indices(shard: ShardSpec, k: int) -> int:
    """k-th index owned by this shard; shards tile the naturals disjointly."""
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    return k * shard.worker_count + shard.worker_id


def encode_frame(mtype: int, body: bytes = b"") -> bytes:
    return _FRAME_HEAD.pack(WIRE_MAGIC, mtype, len(body)) + body


def read_exact(rfile, n: int) -> bytes:
    buf = b""
    while len(buf) < n:
        chunk = rfile.read(n - len(buf))
        if not chunk:
            raise EOFError("connection closed")
        buf += chunk
    return buf


def read_frame(rfile) -> tuple[int, bytes]:
    head = read_exact(rfile, _FRAME_HEAD.size)
    magic, mtype, length = _FRAME_HEAD.unpack(head)
    if magic != WIRE_MAGIC:
        raise ProtocolError(f"bad frame magic {magic!r}")
    return mtype, read_exact(rfile, length)


def hello_body(chash: str, version: int = PROTOCOL_VERSION) -> bytes:
    return struct.pack("<H", version) + chash.encode("ascii")


def parse_hello(body: bytes) -> tuple[int, str]:
    if len(body) < 2:
        raise ProtocolError("HELLO body too short")
    (version,) = struct.unpack_from("<H", body)
    return version, body[2:].decode("ascii")


def get_body(start: int, count: int) -> bytes:
    return struct.pack("<QI", start, count)


def parse_get(body: bytes) -> tuple[int, int]:
    if len(body) != 12:
        raise ProtocolError(f"GET body must be 12 bytes, got {len(body)}")
    return struct.unpack("<QI", body)


def parse_err(body: bytes) -> tuple[int, str]:
    (code,) = struct.unpack_from("<H", body)
    return code, body[2:].decode("utf-8", errors="replace")


class _Handler(socketserver.StreamRequestHandler):
    def _err(self, code: int, message: str) -> None:
        body = struct.pack("<H", code) + message.encode("utf-8")
        self.wfile.write(encode_frame(MSG_ERR, body))
        self.wfile.flush()

    def handle(self):
        server: StreamServer = self.server
        greeted = False
        while True:
            try:
                mtype, body = read_frame(self.rfile)
            except EOFError:
                return
            except ProtocolError as exc:
                self._err(ERR_MALFORMED, str(exc))
                return
            if mtype == MSG_BYE:
                return
            if mtype == MSG_HELLO:
                try:
                    _version, chash = parse_hello(body)
                except ProtocolError as exc:
                    self._err(ERR_MALFORMED, str(exc))
                    return
                if chash != server.cfg_hash:
                    self._err(ERR_CONFIG_MISMATCH,
                              f"server config hash is {server.cfg_hash}")
                    return
                self.wfile.write(encode_frame(MSG_HELLO_ACK, server.cfg_json))
                self.wfile.flush()
                greeted = True
            elif mtype == MSG_GET:
                if not greeted:
                    self._err(ERR_MALFORMED, "GET before HELLO")
                    return
                try:
                    start, count = parse_get(body)
                except ProtocolError as exc:
                    self._err(ERR_MALFORMED, str(exc))
                    return
                if count > server.max_batch:
                    self._err(ERR_BATCH_LIMIT,
                              f"count {count} > max batch {server.max_batch}")
                    continue
                for index in range(start, start + count):
                    video = synthesize_video(server.cfg, index, server.pools)
                    payload = struct.pack("<Q", index) + video_file_bytes(video)
                    self.wfile.write(encode_frame(MSG_VIDEO, payload))
                self.wfile.flush()
            else:
                self._err(ERR_UNKNOWN_TYPE, f"unknown message type {mtype}")
                return


class StreamServer(socketserver.ThreadingTCPServer):
    """One independent handler thread per connection; config is immutable and
    shared, so connections cannot observe each other."""

    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, cfg: GeneratorConfig, bind: tuple[str, int],
                 max_batch: int = DEFAULT_MAX_BATCH):
        validate_config(cfg)
        self.cfg = cfg
        self.cfg_hash = config_hash(cfg)
        self.cfg_json = cfg.to_json().encode("utf-8")
        self.pools = PoolSet(cfg)
        self.max_batch = max_batch
        super().__init__(bind, _Handler)

    @property
    def address(self) -> tuple[str, int]:
        return self.server_address


def start_server(cfg: GeneratorConfig, bind: tuple[str, int] = ("127.0.0.1", 0),
                 max_batch: int = DEFAULT_MAX_BATCH) -> tuple[StreamServer, threading.Thread]:
    """Run a server on a background thread; returns it with its bound address."""
    server = StreamServer(cfg, bind, max_batch=max_batch)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server, thread


def serve(cfg: GeneratorConfig, bind: tuple[str, int],
          max_batch: int = DEFAULT_MAX_BATCH) -> None:
    """Serve until interrupted (CLI entry point)."""
    server = StreamServer(cfg, bind, max_batch=max_batch)
    host, port = server.address
    print(f"serving config {server.cfg_hash} on {host}:{port} "
          f"(max batch {max_batch})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.shutdown()
        server.server_close()


# Convenience for tests and quick scripts: a minimal synchronous client.
def fetch_videos(address: tuple[str, int], chash: str, start: int,
                 count: int) -> list[tuple[int, bytes]]:
    """HELLO + single GET; returns [(index, svid_bytes)]. Raises ProtocolError
    with the server's message on any ERR reply."""
    with socket.create_connection(address) as sock:
        rfile = sock.makefile("rb")
        sock.sendall(encode_frame(MSG_HELLO, hello_body(chash)))
        mtype, body = read_frame(rfile)
        if mtype == MSG_ERR:
            code, text = parse_err(body)
            raise ProtocolError(f"ERR {code}: {text}")
        if mtype != MSG_HELLO_ACK:
            raise ProtocolError(f"expected HELLO_ACK, got type {mtype}")
        sock.sendall(encode_frame(MSG_GET, get_body(start, count)))
        out = []
        for _ in range(count):
            mtype, body = read_frame(rfile)
            if mtype == MSG_ERR:
                code, text = parse_err(body)
                raise ProtocolError(f"ERR {code}: {text}")
            if mtype != MSG_VIDEO:
                raise ProtocolError(f"expected VIDEO, got type {mtype}")
            (index,) = struct.unpack_from("<Q", body)
            out.append((index, body[8:]))
        sock.sendall(encode_frame(MSG_BYE))
        return out

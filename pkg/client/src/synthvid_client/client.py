"""Streaming session and shard-aware batch iterator.

The client does no decoding or transformation beyond reshaping the raw
payload: every semantic lives server-side, and the bytes received here are
directly comparable against server-side checksums.
"""

from __future__ import annotations

import json
import socket
from dataclasses import dataclass

import numpy as np

from . import wire
from .svid import Video, parse_video_bytes


class ConfigMismatch(Exception):
    """Server is generating from a different config than requested."""


class StreamClosed(Exception):
    """Connection dropped; carries how many complete batches were delivered."""

    def __init__(self, message: str, complete_batches: int):
        super().__init__(message)
        self.complete_batches = complete_batches


@dataclass(frozen=True)
class Shard:
    """This worker's slice of the index sequence: 0 <= worker_id < worker_count."""

    worker_id: int = 0
    worker_count: int = 1

    def __post_init__(self):
        if not (0 <= self.worker_id < self.worker_count):
            raise ValueError(f"need 0 <= id < count, got {self.worker_id}/{self.worker_count}")


def shard_index(shard: Shard, k: int) -> int:
    """k-th global video index owned by this shard; shards tile the naturals."""
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    return k * shard.worker_count + shard.worker_id


class Session:
    def __init__(self, sock: socket.socket, config: dict, shard: Shard):
        self._sock = sock
        self._rfile = sock.makefile("rb")
        self.config = config
        self.shard = shard
        self.closed = False

    def fetch(self, start: int, count: int) -> list[Video]:
        """Contiguous indices start..start+count-1, one GET per video so any
        server --max-batch setting is honored."""
        out = []
        for index in range(start, start + count):
            self._sock.sendall(wire.get(index, 1))
            mtype, body = wire.read_message(self._rfile)
            if mtype == wire.ERR:
                code, text = wire.parse_err(body)
                raise wire.ProtocolError(f"ERR {code}: {text}")
            if mtype != wire.VIDEO:
                raise wire.ProtocolError(f"expected VIDEO, got type {mtype}")
            got_index, payload = wire.parse_video(body)
            out.append(parse_video_bytes(payload, index=got_index))
        return out

    def fetch_raw(self, index: int) -> bytes:
        """The exact .svid container bytes for one index."""
        self._sock.sendall(wire.get(index, 1))
        mtype, body = wire.read_message(self._rfile)
        if mtype == wire.ERR:
            code, text = wire.parse_err(body)
            raise wire.ProtocolError(f"ERR {code}: {text}")
        got_index, payload = wire.parse_video(body)
        if got_index != index:
            raise wire.ProtocolError(f"asked for {index}, got {got_index}")
        return payload

    def close(self) -> None:
        if not self.closed:
            try:
                self._sock.sendall(wire.bye())
            except OSError:
                pass
            self._sock.close()
            self.closed = True

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def connect(address: tuple[str, int], config_hash: str,
            shard: Shard = Shard()) -> Session:
    """HELLO/HELLO_ACK handshake; raises ConfigMismatch on a hash the server
    rejects. The returned session carries the server's resolved config."""
    sock = socket.create_connection(address)
    try:
        sock.sendall(wire.hello(config_hash))
        rfile = sock.makefile("rb")
        mtype, body = wire.read_message(rfile)
        if mtype == wire.ERR:
            code, text = wire.parse_err(body)
            if code == wire.ERR_CONFIG_MISMATCH:
                raise ConfigMismatch(text)
            raise wire.ProtocolError(f"ERR {code}: {text}")
        if mtype != wire.HELLO_ACK:
            raise wire.ProtocolError(f"expected HELLO_ACK, got type {mtype}")
        config = json.loads(body.decode("utf-8"))
    except BaseException:
        sock.close()
        raise
    return Session(sock, config, shard)


@dataclass
class Batch:
    """One batch of videos plus their indices and per-video seeds."""

    videos: list[Video]

    @property
    def indices(self) -> list[int]:
        return [v.index for v in self.videos]

    @property
    def seeds(self) -> list[int]:
        return [v.seed for v in self.videos]

    def stacked(self) -> np.ndarray:
        """(batch, T, H, W, 3) uint8; videos sample their own durations, so
        stacking requires every member to share a shape."""
        shapes = {v.frames.shape for v in self.videos}
        if len(shapes) != 1:
            raise ValueError(f"ragged batch, shapes {sorted(shapes)}; "
                             "use .videos for per-video arrays")
        return np.stack([v.frames for v in self.videos])


def batches(session: Session, batch_size: int, start_k: int = 0):
    """Unbounded iterator of Batch objects following the shard's index order
    (global index = k * worker_count + worker_id, k = start_k, start_k+1, ...).
    Indices never repeat. A dropped connection raises StreamClosed at the
    last complete batch boundary; reconnect and resume via start_k."""
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    k = start_k
    complete = 0
    while True:
        videos = []
        try:
            for _ in range(batch_size):
                index = shard_index(session.shard, k)
                videos.extend(session.fetch(index, 1))
                k += 1
        except (EOFError, ConnectionError, OSError) as exc:
            raise StreamClosed(
                f"stream closed after {complete} complete batches: {exc}",
                complete_batches=complete) from exc
        yield Batch(videos=videos)
        complete += 1

"""Fixtures that drive the generator purely through its external surfaces:
the `synthvid` CLI for golden files and hashes, and the TCP protocol for
streaming. The client package never imports the generator."""

import json
import socket
import subprocess
import time

import pytest

CONFIG = {
    "level": "moving_shapes",
    "width": 48,
    "height": 48,
    "duration_range": [4, 4],
    "object_count_range": [1, 3],
    "global_seed": 9,
}


def _run(args):
    proc = subprocess.run(args, capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return proc.stdout


@pytest.fixture(scope="session")
def config_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("cfg") / "config.json"
    path.write_text(json.dumps(CONFIG))
    return str(path)


@pytest.fixture(scope="session")
def config_hash(config_file):
    return _run(["synthvid", "hash", "--config", config_file]).strip()


@pytest.fixture(scope="session")
def golden_dir(tmp_path_factory, config_file):
    out = str(tmp_path_factory.mktemp("golden"))
    _run(["synthvid", "generate", "--config", config_file, "--out", out,
          "--count", "8"])
    return out


def _free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


@pytest.fixture(scope="session")
def server(config_file):
    port = _free_port()
    proc = subprocess.Popen(
        ["synthvid", "serve", "--config", config_file,
         "--bind", f"127.0.0.1:{port}", "--max-batch", "4"],
        stdout=subprocess.PIPE, stderr=subprocess.STDOUT, text=True)
    address = ("127.0.0.1", port)
    deadline = time.time() + 15
    while time.time() < deadline:
        try:
            socket.create_connection(address, timeout=0.5).close()
            break
        except OSError:
            if proc.poll() is not None:
                raise RuntimeError(f"server died: {proc.stdout.read()}")
            time.sleep(0.1)
    else:
        proc.terminate()
        raise RuntimeError("server never came up")
    yield address
    proc.terminate()
    proc.wait(timeout=10)

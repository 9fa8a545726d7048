"""Client conformance criteria, one printed line each."""

import hashlib
import os
import time

from synthvid_client import ConfigMismatch, Shard, connect, shard_index


def report(name, ok, detail, started):
    status = "PASS" if ok else "FAIL"
    print(f"[{status}] {name}: {detail} ({time.perf_counter() - started:.1f}s)")
    assert ok, f"{name}: {detail}"


def test_client_conformance_checksums(server, config_hash, golden_dir):
    t0 = time.perf_counter()
    mismatches = 0
    with connect(server, config_hash) as session:
        for index in range(8):
            got = hashlib.sha256(session.fetch_raw(index)).hexdigest()
            with open(os.path.join(golden_dir, f"{index:06d}.svid"), "rb") as fh:
                want = hashlib.sha256(fh.read()).hexdigest()
            if got != want:
                mismatches += 1
    report("client conformance: golden checksums", mismatches == 0,
           f"{mismatches}/8 indices differ from golden files", t0)


def test_client_conformance_shard_disjointness():
    t0 = time.perf_counter()
    a = {shard_index(Shard(0, 2), k) for k in range(100)}
    b = {shard_index(Shard(1, 2), k) for k in range(100)}
    ok = not (a & b) and sorted(a | b) == list(range(200))
    report("client conformance: shard disjointness", ok,
           "2 shards x 100 indices tile 0..199 with no overlap", t0)


def test_client_conformance_config_mismatch(server):
    t0 = time.perf_counter()
    raised = False
    try:
        connect(server, "0" * 64)
    except ConfigMismatch:
        raised = True
    report("client conformance: wrong hash rejected", raised,
           "ConfigMismatch raised on bogus config hash", t0)

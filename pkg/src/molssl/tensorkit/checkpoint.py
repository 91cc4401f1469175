"""Flat binary container of named f64 arrays with a JSON header.

Layout::

    b"MOLSSLCK"                 8-byte magic
    uint32 LE                   format version
    uint64 LE                   header length H
    H bytes                     UTF-8 JSON header
    payload                     arrays as little-endian f64, back to back

The header lists every array's name, shape and byte offset, plus the global
seed, a build id, free-form metadata and a CRC32 of the payload.
"""

from __future__ import annotations

import functools
import json
import os
import struct
import subprocess
import zlib
from pathlib import Path

import numpy as np

from molssl.errors import CorruptCheckpoint

MAGIC = b"MOLSSLCK"
VERSION = 1


@functools.lru_cache(maxsize=1)
def build_id() -> str:
    from molssl import __version__

    try:
        rev = subprocess.run(
            ["git", "rev-parse", "--short", "HEAD"],
            cwd=Path(__file__).parent, capture_output=True, text=True, timeout=5,
        ).stdout.strip()
    except (OSError, subprocess.SubprocessError):
        rev = ""
    return f"molssl-{__version__}" + (f"+{rev}" if rev else "")


def save_arrays(path, arrays: dict[str, np.ndarray], seed: int | None = None,
                meta: dict | None = None) -> None:
    entries = []
    chunks = []
    offset = 0
    for name, arr in arrays.items():
        buf = np.ascontiguousarray(arr, dtype="<f8").tobytes()
        entries.append({"name": name, "shape": list(np.shape(arr)), "offset": offset, "nbytes": len(buf)})
        chunks.append(buf)
        offset += len(buf)
    payload = b"".join(chunks)
    header = {
        "arrays": entries,
        "seed": seed,
        "build_id": build_id(),
        "meta": meta or {},
        "payload_crc32": zlib.crc32(payload),
    }
    head = json.dumps(header, sort_keys=True).encode()
    tmp = Path(str(path) + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IQ", VERSION, len(head)))
        fh.write(head)
        fh.write(payload)
    os.replace(tmp, path)


def load_arrays(path) -> tuple[dict[str, np.ndarray], dict]:
    raw = Path(path).read_bytes()
    if len(raw) < 20 or raw[:8] != MAGIC:
        raise CorruptCheckpoint(f"{path}: not a molssl checkpoint")
    version, hlen = struct.unpack("<IQ", raw[8:20])
    if version != VERSION:
        raise CorruptCheckpoint(f"{path}: unsupported version {version}")
    if 20 + hlen > len(raw):
        raise CorruptCheckpoint(f"{path}: truncated header")
    try:
        header = json.loads(raw[20:20 + hlen].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptCheckpoint(f"{path}: unreadable header ({exc})") from None
    payload = raw[20 + hlen:]
    expected = sum(e["nbytes"] for e in header["arrays"])
    if len(payload) != expected:
        raise CorruptCheckpoint(f"{path}: payload is {len(payload)} bytes, expected {expected}")
    if zlib.crc32(payload) != header["payload_crc32"]:
        raise CorruptCheckpoint(f"{path}: payload checksum mismatch")
    arrays = {}
    for e in header["arrays"]:
        chunk = payload[e["offset"]:e["offset"] + e["nbytes"]]
        arrays[e["name"]] = np.frombuffer(chunk, dtype="<f8").astype(np.float64).reshape(e["shape"])
    return arrays, header

"""Versioned binary container for trained models.

Byte layout, in order:

* 8 magic bytes ``CVTG0001`` (the two trailing digits are the version),
* 8-byte little-endian unsigned header length L,
* L bytes of UTF-8 JSON (keys sorted, no whitespace) describing the
  model kind, its configuration, and an ``arrays`` manifest of
  ``[name, shape]`` pairs,
* the arrays' raw bytes: float64 little endian, row major, concatenated
  in manifest order.

Everything is deterministic, so two identical trainings produce
byte-identical files.
"""

from __future__ import annotations

import json
import struct

import numpy as np

MAGIC = b"CVTG0001"


class CheckpointError(ValueError):
    """Unreadable or corrupt model file."""


def write_container(path, header: dict, arrays: dict) -> None:
    manifest = [[name, list(arr.shape)] for name, arr in arrays.items()]
    header = dict(header, arrays=manifest)
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for arr in arrays.values():
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def read_container(path):
    """Returns (header, arrays); raises CheckpointError on any corruption."""
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < len(MAGIC) + 8:
        raise CheckpointError("file too short to be a model checkpoint")
    if data[:6] != MAGIC[:6]:
        raise CheckpointError("bad magic bytes: not a model checkpoint")
    if data[:8] != MAGIC:
        raise CheckpointError(f"unsupported checkpoint version {data[6:8]!r}")
    (header_len,) = struct.unpack("<Q", data[8:16])
    if 16 + header_len > len(data):
        raise CheckpointError("truncated header")
    try:
        header = json.loads(data[16:16 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"corrupt header: {exc}") from None
    offset = 16 + header_len
    arrays = {}
    for name, shape in header.get("arrays", []):
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * 8
        if offset + nbytes > len(data):
            raise CheckpointError(f"truncated array block {name!r}")
        flat = np.frombuffer(data[offset:offset + nbytes], dtype="<f8")
        arrays[name] = flat.reshape(shape).astype(np.float64)
        offset += nbytes
    if offset != len(data):
        raise CheckpointError("trailing bytes after the declared arrays")
    return header, arrays

"""Versioned binary container for named parameter tensors.

Layout (all integers little-endian):
    magic   8 bytes  b"SFWT0001"
    u32     header length in bytes
    header  canonical JSON (sorted keys, no whitespace) utf-8:
            {"config": {...}, "meta": {...}, "version": 1,
             "params": [{"id", "shape", "trainable", "offset", "count"}, ...]}
    blob    concatenated float64 little-endian tensor data, params order

The params list is sorted by id and offsets are derived, so the bytes are a
pure function of the content — equal weights produce equal files on any
platform.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path
from typing import Dict, Tuple

import numpy as np

from ..errors import DataError

MAGIC = b"SFWT0001"


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def digest_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def digest_file(path) -> str:
    return digest_bytes(Path(path).read_bytes())


def config_digest(config: dict) -> str:
    return digest_bytes(canonical_json(config).encode("utf-8"))


def pack_weights(arrays: Dict[str, np.ndarray], trainable: Dict[str, bool],
                 config: dict, meta: dict) -> bytes:
    entries = []
    blobs = []
    offset = 0
    for name in sorted(arrays):
        arr = np.ascontiguousarray(arrays[name], dtype="<f8")
        entries.append({"id": name, "shape": list(arr.shape),
                        "trainable": bool(trainable.get(name, True)),
                        "offset": offset, "count": int(arr.size)})
        blobs.append(arr.tobytes())
        offset += arr.size
    header = canonical_json({"version": 1, "config": config, "meta": meta,
                             "params": entries}).encode("utf-8")
    return b"".join([MAGIC, struct.pack("<I", len(header)), header, *blobs])


def unpack_weights(data: bytes) -> Tuple[Dict[str, np.ndarray], Dict[str, bool], dict, dict]:
    if len(data) < len(MAGIC) + 4 or data[: len(MAGIC)] != MAGIC:
        raise DataError("not a styleforge weights container (bad magic)")
    (header_len,) = struct.unpack_from("<I", data, len(MAGIC))
    header_start = len(MAGIC) + 4
    blob_start = header_start + header_len
    if blob_start > len(data):
        raise DataError("truncated weights container header")
    try:
        header = json.loads(data[header_start:blob_start].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataError(f"corrupt weights container header: {exc}") from exc
    if header.get("version") != 1:
        raise DataError(f"unsupported weights container version: {header.get('version')}")
    arrays: Dict[str, np.ndarray] = {}
    trainable: Dict[str, bool] = {}
    for ent in header["params"]:
        start = blob_start + ent["offset"] * 8
        end = start + ent["count"] * 8
        if end > len(data):
            raise DataError(f"truncated tensor data for parameter {ent['id']!r}")
        arr = np.frombuffer(data[start:end], dtype="<f8").astype(np.float64)
        arrays[ent["id"]] = arr.reshape(ent["shape"])
        trainable[ent["id"]] = bool(ent["trainable"])
    return arrays, trainable, header.get("config", {}), header.get("meta", {})


def save_weights(path, arrays: Dict[str, np.ndarray], trainable: Dict[str, bool],
                 config: dict, meta: dict):
    Path(path).write_bytes(pack_weights(arrays, trainable, config, meta))


def load_weights(path) -> Tuple[Dict[str, np.ndarray], Dict[str, bool], dict, dict]:
    return unpack_weights(Path(path).read_bytes())

"""Flat binary checkpoint format with an embedded config.

Layout:

    bytes 0..4    magic b"RLCK"
    bytes 4..8    format version, little-endian uint32
    bytes 8..16   header length in bytes, little-endian uint64
    header        UTF-8 JSON: {"kind", "config", "tensors": [...]}
    payload       concatenated little-endian tensor data

Each tensors[] entry records name, dtype, shape, offset and nbytes (offset
relative to payload start). Serialization is byte-deterministic: tensor names
are sorted and the JSON uses sorted keys with fixed separators, so identical
weights always produce identical files. Checkpoint identity is the sha256 of
the file.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

import numpy as np

MAGIC = b"RLCK"
FORMAT_VERSION = 1

_DTYPES = {"float32": np.float32, "float64": np.float64, "int64": np.int64}


class CheckpointError(RuntimeError):
    pass


def save_checkpoint(
    path: str | os.PathLike,
    kind: str,
    config: dict,
    tensors: dict[str, np.ndarray],
) -> None:
    entries = []
    payload = bytearray()
    for name in sorted(tensors):
        arr = np.ascontiguousarray(tensors[name])
        if arr.dtype.name not in _DTYPES:
            arr = arr.astype(np.float32)
        entries.append(
            {
                "name": name,
                "dtype": arr.dtype.name,
                "shape": list(arr.shape),
                "offset": len(payload),
                "nbytes": arr.nbytes,
            }
        )
        payload += arr.astype(arr.dtype.newbyteorder("<")).tobytes()
    header = json.dumps(
        {"kind": kind, "config": config, "tensors": entries},
        sort_keys=True,
        separators=(",", ":"),
    ).encode("utf-8")
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(FORMAT_VERSION.to_bytes(4, "little"))
        f.write(len(header).to_bytes(8, "little"))
        f.write(header)
        f.write(payload)


def load_checkpoint(path: str | os.PathLike) -> tuple[str, dict, dict[str, np.ndarray]]:
    """Returns (kind, config, tensors)."""
    data = Path(path).read_bytes()
    if data[:4] != MAGIC:
        raise CheckpointError(f"{path}: not a relightlab checkpoint")
    version = int.from_bytes(data[4:8], "little")
    if version != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
    hlen = int.from_bytes(data[8:16], "little")
    header = json.loads(data[16 : 16 + hlen].decode("utf-8"))
    payload = data[16 + hlen :]
    tensors = {}
    for e in header["tensors"]:
        dt = np.dtype(_DTYPES[e["dtype"]]).newbyteorder("<")
        arr = np.frombuffer(
            payload, dtype=dt, count=int(np.prod(e["shape"], dtype=np.int64)) if e["shape"] else 1,
            offset=e["offset"],
        )
        tensors[e["name"]] = arr.reshape(e["shape"]).astype(e["dtype"])
    return header["kind"], header["config"], tensors


def checkpoint_id(path: str | os.PathLike) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]

"""Per-utterance binary feature cache.

Container layout: 4-byte magic, little-endian uint32 header length, a
JSON header carrying at least {dtype, shape, hop, win}, then the raw
array bytes in C order. The header also stores the source-audio and DSP
config hashes so stale caches are detected instead of reused.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from voiceclone.errors import CorruptCheckpoint

MAGIC = b"VCF1"


def write_array(
    path: str | Path,
    array: np.ndarray,
    *,
    hop: int,
    win: int,
    extra: dict | None = None,
) -> None:
    header = {
        "dtype": array.dtype.str,
        "shape": list(array.shape),
        "hop": hop,
        "win": win,
    }
    if extra:
        header.update(extra)
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with Path(path).open("wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(np.ascontiguousarray(array).tobytes())


def read_array(path: str | Path) -> tuple[np.ndarray, dict]:
    """Load a cached array and its header.

    Raises:
        CorruptCheckpoint: bad magic, truncated file, or size mismatch.
    """
    raw = Path(path).read_bytes()
    if len(raw) < 8 or raw[:4] != MAGIC:
        raise CorruptCheckpoint(f"{path}: not a feature cache file")
    (header_len,) = struct.unpack("<I", raw[4:8])
    if len(raw) < 8 + header_len:
        raise CorruptCheckpoint(f"{path}: truncated header")
    try:
        header = json.loads(raw[8 : 8 + header_len].decode("utf-8"))
        dtype = np.dtype(header["dtype"])
        shape = tuple(header["shape"])
    except (ValueError, KeyError, TypeError) as exc:
        raise CorruptCheckpoint(f"{path}: unreadable header ({exc})") from exc
    payload = raw[8 + header_len :]
    expected = dtype.itemsize * int(np.prod(shape, dtype=np.int64)) if shape else dtype.itemsize
    if len(payload) != expected:
        raise CorruptCheckpoint(f"{path}: payload is {len(payload)} bytes, expected {expected}")
    return np.frombuffer(payload, dtype=dtype).reshape(shape).copy(), header


def audio_content_hash(path: str | Path) -> str:
    digest = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()[:16]

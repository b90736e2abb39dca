"""WMT1 tensor serialization.

Record layout (little-endian): magic b"WMT1", rank as u64, dims as u64 each,
then the float64 entries in row-major order. Files may hold several records
back to back.
"""

from __future__ import annotations

import struct
from typing import BinaryIO

import numpy as np

MAGIC = b"WMT1"


def write_tensor(fh: BinaryIO, arr: np.ndarray) -> None:
    arr = np.asarray(arr, dtype=np.float64)  # note: tobytes() is row-major
    fh.write(MAGIC)
    fh.write(struct.pack("<Q", arr.ndim))
    for dim in arr.shape:
        fh.write(struct.pack("<Q", dim))
    fh.write(arr.astype("<f8", copy=False).tobytes())


def read_tensor(fh: BinaryIO) -> np.ndarray:
    magic = fh.read(4)
    if magic != MAGIC:
        raise ValueError(f"bad tensor magic {magic!r}, expected {MAGIC!r}")
    (rank,) = struct.unpack("<Q", fh.read(8))
    shape = tuple(struct.unpack("<Q", fh.read(8))[0] for _ in range(rank))
    count = int(np.prod(shape)) if shape else 1
    raw = fh.read(8 * count)
    if len(raw) != 8 * count:
        raise ValueError("truncated tensor record")
    data = np.frombuffer(raw, dtype="<f8").astype(np.float64)
    return data.reshape(shape)


def save_tensors(path, arrays: list[np.ndarray]) -> None:
    with open(path, "wb") as fh:
        for arr in arrays:
            write_tensor(fh, arr)


def load_tensors(path, count: int | None = None) -> list[np.ndarray]:
    """Read `count` records, or all records until EOF when count is None."""
    out = []
    with open(path, "rb") as fh:
        while count is None or len(out) < count:
            head = fh.read(4)
            if not head:
                break
            fh.seek(-4, 1)
            out.append(read_tensor(fh))
    if count is not None and len(out) != count:
        raise ValueError(f"expected {count} tensor records, found {len(out)}")
    return out


def tensor_bytes(arr: np.ndarray) -> bytes:
    """Serialized WMT1 bytes of one tensor (used for hashing)."""
    import io

    buf = io.BytesIO()
    write_tensor(buf, arr)
    return buf.getvalue()

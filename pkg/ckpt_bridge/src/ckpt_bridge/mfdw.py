"""Stand-alone MFDW writer/reader.

Implements the interop contract of the inference package's weight files
without depending on it: magic "MFDW", u32 version 1, u32 count, a
directory of (u16 name length, UTF-8 name, u8 dtype tag 0 = float32,
u8 ndim, ndim x u32 dims, u64 blob offset), then contiguous little-endian
float32 payloads starting at the next 16-byte boundary. Tensors are
written sorted by name with strictly increasing offsets, so equal stores
serialize byte-identically; an empty store is exactly the 12-byte header.
"""

from __future__ import annotations

import os
import struct
import tempfile

import numpy as np

MAGIC = b"MFDW"
VERSION = 1
DTYPE_F32 = 0
_ALIGN = 16


class MfdwFormatError(ValueError):
    """The file violates the MFDW layout contract."""


def _umask() -> int:
    mask = os.umask(0)
    os.umask(mask)
    return mask


def write(store: dict[str, np.ndarray], path: str) -> None:
    directory = bytearray()
    payload = bytearray()
    offset = 0
    for name in sorted(store):
        t = np.ascontiguousarray(store[name], dtype="<f4")
        if t.ndim < 1 or min(t.shape) < 1:
            raise MfdwFormatError(f"tensor '{name}' must have positive dims, got {t.shape}")
        raw = name.encode("utf-8")
        directory += struct.pack("<H", len(raw)) + raw
        directory += struct.pack("<BB", DTYPE_F32, t.ndim)
        directory += struct.pack(f"<{t.ndim}I", *t.shape)
        directory += struct.pack("<Q", offset)
        payload += t.tobytes()
        offset += t.nbytes
    out = bytearray(MAGIC) + struct.pack("<II", VERSION, len(store))
    out += directory
    if store:
        out += b"\x00" * ((-len(out)) % _ALIGN)
        out += payload
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(bytes(out))
        # mkstemp creates 0600 files; give the final file normal permissions
        os.chmod(tmp, 0o666 & ~_umask())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read(path: str) -> dict[str, np.ndarray]:
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < 12 or data[:4] != MAGIC:
        raise MfdwFormatError(f"{path}: not an MFDW file")
    version, count = struct.unpack_from("<II", data, 4)
    if version != VERSION:
        raise MfdwFormatError(f"{path}: unsupported version {version}")
    pos = 12
    entries = []
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", data, pos)
        pos += 2
        name = data[pos : pos + name_len].decode("utf-8")
        pos += name_len
        dtype, ndim = struct.unpack_from("<BB", data, pos)
        pos += 2
        if dtype != DTYPE_F32:
            raise MfdwFormatError(f"{path}: tensor '{name}' has dtype tag {dtype}")
        dims = struct.unpack_from(f"<{ndim}I", data, pos)
        pos += 4 * ndim
        (offset,) = struct.unpack_from("<Q", data, pos)
        pos += 8
        entries.append((name, dims, offset))
    blob_start = pos + ((-pos) % _ALIGN) if count else pos
    store = {}
    for name, dims, offset in entries:
        n = int(np.prod(dims))
        start = blob_start + offset
        if start + 4 * n > len(data):
            raise MfdwFormatError(f"{path}: tensor '{name}' runs past end of file")
        store[name] = np.frombuffer(data, dtype="<f4", count=n, offset=start).reshape(dims).copy()
    return store

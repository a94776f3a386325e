"""MFDW weight files and deterministic initializers.

Layout (all integers little-endian):

    magic   4 bytes  b"MFDW"
    version u32      1
    count   u32      number of tensors
    entry*  count times:
        name_len u16, name (UTF-8), dtype u8 (0 = float32), ndim u8,
        dims ndim x u32, offset u64 (into the blob)
    blob    starts at the next 16-byte boundary; tensors are contiguous
            little-endian float32, offsets strictly increasing and
            non-overlapping

An empty store is exactly the 12-byte header. Stores round-trip
bit-identically: save(load(p)) reproduces p's payload bytes.
"""

from __future__ import annotations

import os
import struct
import tempfile
from dataclasses import dataclass

import numpy as np

from .graph import GraphSpec, required_tensors

MAGIC = b"MFDW"
VERSION = 1
DTYPE_F32 = 0
_ALIGN = 16

INIT_SCHEMES = ("kaiming_uniform", "zeros", "identity")


class MfdwError(ValueError):
    """Base class for weight-file format violations."""


class BadMagic(MfdwError):
    pass


class VersionMismatch(MfdwError):
    pass


class TruncatedBlob(MfdwError):
    pass


class OverlappingExtents(MfdwError):
    pass


def _umask() -> int:
    mask = os.umask(0)
    os.umask(mask)
    return mask


def _atomic_write(path: str, data: bytes) -> None:
    # never leave a partial file behind
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        # mkstemp creates 0600 files; give the final file normal permissions
        os.chmod(tmp, 0o666 & ~_umask())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save(store: dict[str, np.ndarray], path: str) -> None:
    """Write tensors sorted by name; byte-for-byte deterministic."""
    names = sorted(store)
    directory = bytearray()
    offset = 0
    payload = bytearray()
    for name in names:
        t = np.ascontiguousarray(store[name], dtype="<f4")
        if t.ndim < 1 or min(t.shape) < 1:
            raise MfdwError(f"tensor '{name}' must have positive dims, got {t.shape}")
        raw = name.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise MfdwError(f"tensor name too long ({len(raw)} bytes)")
        directory += struct.pack("<H", len(raw)) + raw
        directory += struct.pack("<BB", DTYPE_F32, t.ndim)
        directory += struct.pack(f"<{t.ndim}I", *t.shape)
        directory += struct.pack("<Q", offset)
        payload += t.tobytes()
        offset += t.nbytes
    out = bytearray(MAGIC)
    out += struct.pack("<II", VERSION, len(names))
    out += directory
    if names:
        pad = (-len(out)) % _ALIGN
        out += b"\x00" * pad
        out += payload
    _atomic_write(path, bytes(out))


def load(path: str) -> dict[str, np.ndarray]:
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < 12:
        raise TruncatedBlob(f"file is {len(data)} bytes, smaller than the 12-byte header")
    if data[:4] != MAGIC:
        raise BadMagic(f"bad magic {data[:4]!r}, expected {MAGIC!r}")
    version, count = struct.unpack_from("<II", data, 4)
    if version != VERSION:
        raise VersionMismatch(f"unsupported version {version}, expected {VERSION}")
    pos = 12
    entries: list[tuple[str, tuple[int, ...], int]] = []
    for _ in range(count):
        if pos + 2 > len(data):
            raise TruncatedBlob("directory runs past end of file")
        (name_len,) = struct.unpack_from("<H", data, pos)
        pos += 2
        if pos + name_len + 2 > len(data):
            raise TruncatedBlob("directory entry runs past end of file")
        try:
            name = data[pos : pos + name_len].decode("utf-8")
        except UnicodeDecodeError as e:
            raise MfdwError(f"tensor name is not valid UTF-8: {e}") from None
        pos += name_len
        dtype, ndim = struct.unpack_from("<BB", data, pos)
        pos += 2
        if dtype != DTYPE_F32:
            raise MfdwError(f"tensor '{name}' has unsupported dtype tag {dtype}")
        if pos + 4 * ndim + 8 > len(data):
            raise TruncatedBlob("directory entry runs past end of file")
        dims = struct.unpack_from(f"<{ndim}I", data, pos)
        pos += 4 * ndim
        if ndim < 1 or min(dims) < 1:
            raise MfdwError(f"tensor '{name}' has non-positive shape {dims}")
        (offset,) = struct.unpack_from("<Q", data, pos)
        pos += 8
        entries.append((name, dims, offset))
    blob_start = pos + ((-pos) % _ALIGN) if count else pos
    store: dict[str, np.ndarray] = {}
    prev_end = -1
    for name, dims, offset in entries:
        if name in store:
            raise MfdwError(f"duplicate tensor name '{name}'")
        nbytes = 4 * int(np.prod(dims))
        if offset <= prev_end:
            raise OverlappingExtents(
                f"tensor '{name}' offset {offset} overlaps the previous extent"
            )
        prev_end = offset + nbytes - 1
        start = blob_start + offset
        if start + nbytes > len(data):
            raise TruncatedBlob(
                f"tensor '{name}' extent [{offset}, {offset + nbytes}) runs past end of blob"
            )
        arr = np.frombuffer(data, dtype="<f4", count=int(np.prod(dims)), offset=start)
        store[name] = arr.reshape(dims).copy()
    return store


@dataclass
class InitSpec:
    seed: int = 0
    scheme: str = "kaiming_uniform"

    def __post_init__(self) -> None:
        if self.scheme not in INIT_SCHEMES:
            raise ValueError(f"unknown init scheme {self.scheme!r}")


def _fan_in(name: str, shape: tuple[int, ...]) -> int:
    # conv weights are OIHW; 1-d tensors are biases/slopes
    if len(shape) == 4:
        return shape[1] * shape[2] * shape[3]
    return shape[0]


def _identity_kernel(shape: tuple[int, ...]) -> np.ndarray:
    t = np.zeros(shape, dtype=np.float32)
    if len(shape) == 4:
        o, i, kh, kw = shape
        for c in range(min(o, i)):
            t[c, c, kh // 2, kw // 2] = 1.0
    return t


def init_random(g: GraphSpec, spec: InitSpec) -> dict[str, np.ndarray]:
    """Weights for every tensor the graph resolves, with the right shapes.

    kaiming_uniform draws conv weights from U(+-sqrt(6/fan_in)); biases are
    zeros and prelu slopes 0.25. Tensors are drawn in sorted-name order, so
    equal seeds give byte-identical stores.
    """
    rng = np.random.default_rng(spec.seed)
    store: dict[str, np.ndarray] = {}
    for name, shape in sorted(required_tensors(g).items()):
        if spec.scheme == "zeros":
            store[name] = np.zeros(shape, dtype=np.float32)
        elif spec.scheme == "identity":
            if name.endswith(".slope"):
                store[name] = np.full(shape, 0.25, dtype=np.float32)
            else:
                store[name] = _identity_kernel(shape)
        else:
            if len(shape) == 4:
                bound = float(np.sqrt(6.0 / _fan_in(name, shape)))
                store[name] = rng.uniform(-bound, bound, shape).astype(np.float32)
            elif name.endswith(".slope"):
                store[name] = np.full(shape, 0.25, dtype=np.float32)
            else:
                store[name] = np.zeros(shape, dtype=np.float32)
    return store

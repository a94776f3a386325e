"""Binary PPM (P6, 8-bit) image I/O plus tensor conversion helpers.

PNG is supported through the same entry points when Pillow is installed.
"""

from __future__ import annotations

import os
import tempfile

import numpy as np


class ImageError(ValueError):
    pass


def _next_token(data: bytes, pos: int) -> tuple[bytes, int]:
    # whitespace-delimited header token; '#' starts a comment to end of line
    while pos < len(data):
        ch = data[pos : pos + 1]
        if ch == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
        elif ch.isspace():
            pos += 1
        else:
            break
    start = pos
    while pos < len(data) and not data[pos : pos + 1].isspace():
        pos += 1
    if start == pos:
        raise ImageError("unexpected end of PPM header")
    return data[start:pos], pos


def read_ppm(path: str) -> np.ndarray:
    """Read a binary P6 file into an (h, w, 3) uint8 array."""
    with open(path, "rb") as f:
        data = f.read()
    magic, pos = _next_token(data, 0)
    if magic != b"P6":
        raise ImageError(f"not a binary PPM (P6) file: magic {magic!r}")
    fields = []
    for _ in range(3):
        tok, pos = _next_token(data, pos)
        if not tok.isdigit():
            raise ImageError(f"malformed PPM header token {tok!r}")
        fields.append(int(tok))
    width, height, maxval = fields
    if maxval != 255:
        raise ImageError(f"only 8-bit PPM (maxval 255) is supported, got {maxval}")
    if width < 1 or height < 1:
        raise ImageError(f"image dimensions must be positive, got {width}x{height}")
    pos += 1  # single whitespace byte after maxval
    need = width * height * 3
    if len(data) - pos < need:
        raise ImageError(f"PPM payload truncated: expected {need} bytes, got {len(data) - pos}")
    img = np.frombuffer(data, dtype=np.uint8, count=need, offset=pos)
    return img.reshape(height, width, 3).copy()


def write_ppm(path: str, img: np.ndarray) -> None:
    img = np.asarray(img)
    if img.dtype != np.uint8 or img.ndim != 3 or img.shape[2] != 3:
        raise ImageError(f"expected (h, w, 3) uint8 image, got {img.dtype} {img.shape}")
    h, w = img.shape[:2]
    payload = b"P6\n%d %d\n255\n" % (w, h) + img.tobytes()
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_image(path: str) -> np.ndarray:
    if path.lower().endswith(".ppm"):
        return read_ppm(path)
    try:
        from PIL import Image
    except ImportError:
        raise ImageError(
            f"cannot read {path!r}: only .ppm is supported without Pillow installed"
        ) from None
    img = np.asarray(Image.open(path).convert("RGB"))
    return img.astype(np.uint8)


def write_image(path: str, img: np.ndarray) -> None:
    if path.lower().endswith(".ppm"):
        write_ppm(path, img)
        return
    try:
        from PIL import Image
    except ImportError:
        raise ImageError(
            f"cannot write {path!r}: only .ppm is supported without Pillow installed"
        ) from None
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, suffix=os.path.splitext(path)[1])
    os.close(fd)
    try:
        Image.fromarray(img).save(tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def to_tensor(img: np.ndarray) -> np.ndarray:
    """(h, w, 3) uint8 -> (1, 3, h, w) float32 in [0, 1]."""
    t = img.astype(np.float32) / np.float32(255.0)
    return t.transpose(2, 0, 1)[None, ...]


def from_tensor(t: np.ndarray) -> np.ndarray:
    """(1, 3, h, w) float32 -> (h, w, 3) uint8, clamped then rounded."""
    x = np.clip(t[0], 0.0, 1.0) * np.float32(255.0)
    return np.rint(x).astype(np.uint8).transpose(1, 2, 0)


def pad_to_multiple(t: np.ndarray, multiple: int) -> tuple[np.ndarray, tuple[int, int]]:
    """Reflection-pad H and W up to the next multiple; returns the original
    size so the output can be cropped back."""
    _, _, h, w = t.shape
    ph = (-h) % multiple
    pw = (-w) % multiple
    if ph or pw:
        t = np.pad(t, ((0, 0), (0, 0), (0, ph), (0, pw)), mode="symmetric")
    return t, (h, w)

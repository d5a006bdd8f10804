"""Tensor container, PNG and IDX readers/writers.

MRTK layout (all little-endian)::

    b"MRTK" | version u8 = 1 | dtype u8 = 1 (float32) | rank u8 | rank x u32 dims | payload

Images are channel-major ``(C, H, W)`` float arrays in ``[0, 1]``.
"""
from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .errors import FormatError

MAGIC = b"MRTK"
VERSION = 1
DTYPE_FLOAT32 = 1
_HEADER = 7
_MAX_ELEMENTS = 1 << 40

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801


def atomic_write_bytes(path, data: bytes):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def encode_tensor(array) -> bytes:
    a = np.asarray(array, dtype="<f4")
    if a.ndim > 255:
        raise FormatError(f"rank {a.ndim} does not fit the rank byte")
    header = MAGIC + bytes([VERSION, DTYPE_FLOAT32, a.ndim])
    header += struct.pack(f"<{a.ndim}I", *a.shape)
    return header + np.ascontiguousarray(a).tobytes()


def decode_tensor(buf: bytes) -> np.ndarray:
    if len(buf) < 4 or buf[:4] != MAGIC:
        raise FormatError("bad magic, expected b'MRTK'", offset=0)
    if len(buf) < _HEADER:
        raise FormatError("truncated header", offset=len(buf))
    if buf[4] != VERSION:
        raise FormatError(f"unsupported version {buf[4]}", offset=4)
    if buf[5] != DTYPE_FLOAT32:
        raise FormatError(f"unsupported dtype code {buf[5]}", offset=5)
    rank = buf[6]
    dims_end = _HEADER + 4 * rank
    if len(buf) < dims_end:
        raise FormatError("truncated dimension table", offset=len(buf))
    dims = struct.unpack_from(f"<{rank}I", buf, _HEADER)
    count = 1
    for i, d in enumerate(dims):
        count *= d
        if count > _MAX_ELEMENTS:
            raise FormatError("dimension product overflows the element limit",
                              offset=_HEADER + 4 * i)
    need = dims_end + 4 * count
    if len(buf) < need:
        raise FormatError(f"truncated payload: need {need} bytes, have {len(buf)}",
                          offset=len(buf))
    if len(buf) > need:
        raise FormatError("trailing bytes after payload", offset=need)
    data = np.frombuffer(buf, dtype="<f4", count=count, offset=dims_end)
    return data.astype(np.float32).reshape(dims)


def save_tensor(path, array):
    atomic_write_bytes(path, encode_tensor(array))


def load_tensor(path) -> np.ndarray:
    return decode_tensor(Path(path).read_bytes())


def load_image(path) -> np.ndarray:
    """Read an 8-bit grayscale or RGB PNG as a ``(C, H, W)`` array in [0, 1]."""
    from PIL import Image

    with Image.open(path) as im:
        if im.mode == "L":
            a = np.asarray(im, dtype=np.uint8)[None]
        elif im.mode == "RGB":
            a = np.asarray(im, dtype=np.uint8).transpose(2, 0, 1)
        else:
            raise FormatError(f"{path}: unsupported image mode {im.mode!r} "
                              "(need 8-bit L or RGB)")
    return a.astype(np.float64) / 255.0


def quantize(image) -> np.ndarray:
    """Map unit-range values to bytes: round-half-up of clamp(v) * 255."""
    v = np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0)
    return np.floor(v * 255.0 + 0.5).astype(np.uint8)


def save_image(path, image):
    from PIL import Image

    q = quantize(image)
    if q.ndim != 3 or q.shape[0] not in (1, 3):
        raise FormatError(f"expected (1|3, H, W) image, got shape {q.shape}")
    if q.shape[0] == 1:
        im = Image.fromarray(q[0], mode="L")
    else:
        im = Image.fromarray(np.ascontiguousarray(q.transpose(1, 2, 0)), mode="RGB")
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".png")
    os.close(fd)
    try:
        im.save(tmp, format="PNG")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_idx(path, magic):
    buf = Path(path).read_bytes()
    if len(buf) < 8:
        raise FormatError(f"{path}: truncated IDX header", offset=len(buf))
    got = struct.unpack_from(">I", buf, 0)[0]
    if got != magic:
        raise FormatError(f"{path}: IDX magic 0x{got:08x}, expected 0x{magic:08x}", offset=0)
    ndim = magic & 0xFF
    if len(buf) < 4 + 4 * ndim:
        raise FormatError(f"{path}: truncated IDX dimensions", offset=len(buf))
    dims = struct.unpack_from(f">{ndim}I", buf, 4)
    start = 4 + 4 * ndim
    count = int(np.prod(dims))
    if len(buf) < start + count:
        raise FormatError(f"{path}: truncated IDX payload", offset=len(buf))
    return np.frombuffer(buf, dtype=np.uint8, count=count, offset=start).reshape(dims)


def load_idx(images_path, labels_path):
    """Read an IDX image/label pair as ``(N, 1, H, W)`` floats and int labels."""
    images = _read_idx(images_path, IDX_IMAGES_MAGIC)
    labels = _read_idx(labels_path, IDX_LABELS_MAGIC)
    if images.shape[0] != labels.shape[0]:
        raise FormatError(f"image count {images.shape[0]} != label count {labels.shape[0]}")
    x = images.astype(np.float64)[:, None] / 255.0
    return x, labels.astype(np.int64)

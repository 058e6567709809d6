"""Portable graymap I/O: reads P2 and P5 (comments allowed), writes P5."""
from __future__ import annotations

import numpy as np


class PgmError(ValueError):
    pass


def _tokens(data: bytes, count: int, pos: int):
    """Read ``count`` whitespace-separated header tokens, skipping ``#`` comments."""
    out = []
    n = len(data)
    while len(out) < count:
        while pos < n and data[pos:pos + 1].isspace():
            pos += 1
        if pos >= n:
            raise PgmError("truncated header")
        if data[pos:pos + 1] == b"#":
            while pos < n and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        out.append(data[start:pos])
    return out, pos


def parse_pgm(data: bytes) -> np.ndarray:
    if data[:2] not in (b"P2", b"P5"):
        raise PgmError("not a PGM file (expected P2 or P5 magic)")
    magic = data[:2]
    try:
        (w, h, maxval), pos = _tokens(data, 3, 2)
        w, h, maxval = int(w), int(h), int(maxval)
    except ValueError as exc:
        raise PgmError(f"bad header: {exc}") from exc
    if w < 1 or h < 1:
        raise PgmError("dimensions must be positive")
    if not 0 < maxval <= 255:
        raise PgmError(f"unsupported max value {maxval}")
    if magic == b"P5":
        # exactly one whitespace byte separates the header from the raster
        pos += 1
        raster = data[pos:pos + w * h]
        if len(raster) < w * h:
            raise PgmError("truncated raster")
        pixels = np.frombuffer(raster, dtype=np.uint8).astype(float)
    else:
        body = data[pos:].split()
        if len(body) < w * h:
            raise PgmError("truncated raster")
        try:
            pixels = np.array([int(t) for t in body[:w * h]], dtype=float)
        except ValueError as exc:
            raise PgmError(f"bad pixel value: {exc}") from exc
    if pixels.max(initial=0) > maxval:
        raise PgmError("pixel exceeds max value")
    img = pixels.reshape(h, w)
    if maxval != 255:
        img = img * (255.0 / maxval)
    return img


def read_pgm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        return parse_pgm(fh.read())


def encode_pgm(img) -> bytes:
    arr = np.asarray(img, dtype=float)
    if arr.ndim != 2 or min(arr.shape) < 1:
        raise PgmError("image must be a non-empty 2-D grid")
    if not np.all(np.isfinite(arr)):
        raise PgmError("image has non-finite values")
    pix = np.clip(np.rint(arr), 0, 255).astype(np.uint8)
    h, w = pix.shape
    return f"P5\n{w} {h}\n255\n".encode() + pix.tobytes()


def write_pgm(path, img) -> None:
    with open(path, "wb") as fh:
        fh.write(encode_pgm(img))

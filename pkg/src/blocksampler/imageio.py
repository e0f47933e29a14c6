"""Binary PGM (P5) and raw float32 image files."""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from blocksampler.errors import InputError


def write_pgm(path: str | os.PathLike, image, maxval: int = 255) -> None:
    """Write integer pixel values as P5; ``maxval > 255`` selects 16-bit big-endian samples."""
    image = np.asarray(image)
    if image.ndim != 2:
        raise InputError("PGM images must be 2-D")
    if not 1 <= maxval <= 65535:
        raise InputError(f"PGM maxval must be in [1, 65535], got {maxval}")
    values = np.rint(image).astype(np.int64)
    if values.min(initial=0) < 0 or values.max(initial=0) > maxval:
        raise InputError(f"pixel values outside [0, {maxval}]")
    dtype = ">u2" if maxval > 255 else "u1"
    rows, cols = values.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{cols} {rows}\n{maxval}\n".encode("ascii"))
        fh.write(values.astype(dtype).tobytes())


def read_pgm(path: str | os.PathLike) -> np.ndarray:
    data = Path(path).read_bytes()
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    if tokens[0] != b"P5":
        raise InputError(f"{path}: not a binary PGM")
    cols, rows, maxval = (int(t) for t in tokens[1:])
    pos += 1
    dtype = ">u2" if maxval > 255 else "u1"
    pixels = np.frombuffer(data, dtype=dtype, count=rows * cols, offset=pos)
    return pixels.reshape(rows, cols).astype(np.int64)


def scale_to_pgm(path: str | os.PathLike, image, maxval: int = 65535) -> None:
    """Linearly map ``[min, max]`` of a real image onto ``[0, maxval]`` and write it."""
    image = np.asarray(image, dtype=float)
    lo, hi = float(image.min()), float(image.max())
    scaled = np.zeros_like(image) if hi == lo else (image - lo) / (hi - lo) * maxval
    write_pgm(path, scaled, maxval)


def write_f32(path: str | os.PathLike, image) -> None:
    """Row-major little-endian float32 samples plus a ``.json`` sidecar holding ``n1`` and ``n2``."""
    image = np.asarray(image, dtype=float)
    if image.ndim != 2:
        raise InputError("float images must be 2-D")
    Path(path).write_bytes(image.astype("<f4").tobytes())
    n1, n2 = image.shape
    Path(f"{path}.json").write_text(json.dumps({"n1": n1, "n2": n2}, sort_keys=True) + "\n", encoding="ascii")


def read_f32(path: str | os.PathLike) -> np.ndarray:
    meta = json.loads(Path(f"{path}.json").read_text(encoding="ascii"))
    n1, n2 = int(meta["n1"]), int(meta["n2"])
    raw = np.frombuffer(Path(path).read_bytes(), dtype="<f4")
    if raw.size != n1 * n2:
        raise InputError(f"{path}: {raw.size} samples for a {n1}x{n2} image")
    return raw.reshape(n1, n2).astype(float)


def read_image(path: str | os.PathLike) -> np.ndarray:
    """Load a ``.pgm`` or ``.f32`` image as floats."""
    suffix = Path(path).suffix.lower()
    if suffix == ".pgm":
        return read_pgm(path).astype(float)
    if suffix == ".f32":
        return read_f32(path)
    raise InputError(f"{path}: unsupported image format {suffix!r}")

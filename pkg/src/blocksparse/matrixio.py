"""Portable file formats: binary PGM images and a raw float64 matrix container.

PGM (P5) covers 8-bit and 16-bit grayscale emission without external image
libraries; 16-bit samples are big-endian per the format.  The matrix
container stores exact solver state: magic line ``BSMX1``, an ASCII
``rows cols`` line, then row-major little-endian float64 payload.
"""

from __future__ import annotations

import numpy as np

_MATRIX_MAGIC = b"BSMX1\n"


def quantize(image, lo: float, hi: float, maxval: int = 255) -> np.ndarray:
    """Affinely map ``[lo, hi]`` to ``[0, maxval]`` with clipping and rounding."""
    if hi <= lo:
        raise ValueError("need hi > lo to quantize")
    if not 0 < maxval < 65536:
        raise ValueError("maxval must be in [1, 65535]")
    a = np.asarray(image, dtype=float)
    scaled = np.clip((a - lo) / (hi - lo), 0.0, 1.0) * maxval
    dtype = np.uint8 if maxval <= 255 else np.uint16
    return np.rint(scaled).astype(dtype)


def write_pgm(path, image, maxval: int | None = None, lo: float | None = None,
              hi: float | None = None) -> None:
    """Write a grayscale image as binary PGM.

    Integer arrays are written directly (``maxval`` defaults to the dtype
    limit); float arrays are quantized over ``[lo, hi]`` (defaulting to the
    data range) at ``maxval`` levels (default 255).
    """
    a = np.asarray(image)
    if a.ndim != 2:
        raise ValueError(f"PGM needs a 2-D image, got shape {a.shape}")
    if np.issubdtype(a.dtype, np.integer):
        if maxval is None:
            maxval = 255 if a.dtype.itemsize == 1 else 65535
        if a.min() < 0 or a.max() > maxval:
            raise ValueError("integer samples out of range for the declared maxval")
        samples = a.astype(np.uint8 if maxval <= 255 else np.uint16)
    else:
        if maxval is None:
            maxval = 255
        lo = float(a.min()) if lo is None else lo
        hi = float(a.max()) if hi is None else hi
        if hi <= lo:
            hi = lo + 1.0
        samples = quantize(a, lo, hi, maxval)
    header = f"P5\n{a.shape[1]} {a.shape[0]}\n{maxval}\n".encode("ascii")
    payload = samples.astype(">u2").tobytes() if maxval > 255 else samples.tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def read_pgm(path) -> tuple[np.ndarray, int]:
    """Read a binary PGM; returns (samples, maxval)."""
    with open(path, "rb") as fh:
        data = fh.read()
    fields: list[bytes] = []
    pos = 0
    while len(fields) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        fields.append(data[start:pos])
    if fields[0] != b"P5":
        raise ValueError(f"not a binary PGM: magic {fields[0]!r}")
    width, height, maxval = (int(f) for f in fields[1:])
    pos += 1  # single whitespace byte after maxval
    dtype = np.dtype(">u2") if maxval > 255 else np.dtype(np.uint8)
    count = width * height
    samples = np.frombuffer(data, dtype=dtype, count=count, offset=pos)
    if samples.size != count:
        raise ValueError("truncated PGM payload")
    out = samples.reshape(height, width)
    return (out.astype(np.uint16) if maxval > 255 else out.copy()), maxval


def write_matrix(path, a) -> None:
    """Write a 2-D float64 matrix in the exact-state container format."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"container stores 2-D matrices, got shape {a.shape}")
    with open(path, "wb") as fh:
        fh.write(_MATRIX_MAGIC)
        fh.write(f"{a.shape[0]} {a.shape[1]}\n".encode("ascii"))
        fh.write(np.ascontiguousarray(a, dtype="<f8").tobytes())


def read_matrix(path) -> np.ndarray:
    """Read a matrix written by :func:`write_matrix`."""
    with open(path, "rb") as fh:
        magic = fh.read(len(_MATRIX_MAGIC))
        if magic != _MATRIX_MAGIC:
            raise ValueError(f"bad matrix container magic {magic!r}")
        dims = fh.readline().split()
        if len(dims) != 2:
            raise ValueError("malformed dimension line")
        rows, cols = int(dims[0]), int(dims[1])
        payload = fh.read(rows * cols * 8)
    if len(payload) != rows * cols * 8:
        raise ValueError("truncated matrix payload")
    return np.frombuffer(payload, dtype="<f8").reshape(rows, cols).copy()

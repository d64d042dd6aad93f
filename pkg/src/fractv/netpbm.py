"""Netpbm and CSV serialization for fields and pixel sets.

2D scalar fields travel as PGM (P2 ascii or P5 binary), with the
integer range ``[0, maxval]`` mapped affinely onto ``[0, 1]``; writing
8-bit data and reading it back is value-exact.  Pixel sets travel as
PBM (P1/P4) where a raised bit means membership, plus one comment line
``# background 0|1`` carrying the exterior bit (and ``# dim 1`` for
one-dimensional sets, stored as a single PBM row).  1D fields use
plain text, one value per line.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .grid import GridDomain, PixelSet, ScalarField

__all__ = [
    "read_pgm",
    "write_pgm",
    "read_pbm",
    "write_pbm",
    "read_csv_field",
    "write_csv_field",
    "read_field",
    "write_field",
]


def _tokenize_header(data: bytes, count: int) -> tuple[list[bytes], int, list[bytes]]:
    """First ``count`` whitespace tokens outside comments, with comments and end offset."""
    tokens: list[bytes] = []
    comments: list[bytes] = []
    i = 0
    while len(tokens) < count:
        if i >= len(data):
            raise ValueError("truncated netpbm header")
        ch = data[i : i + 1]
        if ch == b"#":
            j = data.find(b"\n", i)
            j = len(data) if j < 0 else j
            comments.append(data[i + 1 : j].strip())
            i = j + 1
        elif ch.isspace():
            i += 1
        else:
            j = i
            while j < len(data) and not data[j : j + 1].isspace() and data[j : j + 1] != b"#":
                j += 1
            tokens.append(data[i:j])
            i = j
    return tokens, i, comments


def read_pgm(path, spacing: float = 1.0, origin: tuple[float, float] = (0.0, 0.0)) -> ScalarField:
    """Read a P2/P5 grayscale image as a field with values in [0, 1]."""
    data = Path(path).read_bytes()
    tokens, pos, _ = _tokenize_header(data, 4)
    magic = tokens[0]
    if magic not in (b"P2", b"P5"):
        raise ValueError(f"not a PGM file (magic {magic!r})")
    width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval < 1 or maxval > 65535:
        raise ValueError(f"unsupported maxval {maxval}")
    n = width * height
    if magic == b"P2":
        raster = np.array(data[pos:].split()[:n], dtype=np.int64)
    else:
        pos += 1  # single whitespace after maxval
        if maxval > 255:
            raster = np.frombuffer(data[pos : pos + 2 * n], dtype=">u2").astype(np.int64)
        else:
            raster = np.frombuffer(data[pos : pos + n], dtype=np.uint8).astype(np.int64)
    if raster.size != n:
        raise ValueError("PGM raster shorter than header promises")
    values = raster.reshape(height, width) / float(maxval)
    return ScalarField(GridDomain((height, width), spacing, origin), values)


def write_pgm(field: ScalarField, path, maxval: int = 255, binary: bool = True) -> None:
    """Write a 2D field as PGM, mapping [0, 1] affinely to [0, maxval].

    Values outside [0, 1] are clipped.
    """
    if field.domain.dim != 2:
        raise ValueError("PGM output needs a 2D field")
    if maxval < 1 or maxval > 65535:
        raise ValueError(f"unsupported maxval {maxval}")
    height, width = field.domain.shape
    levels = np.rint(np.clip(field.values, 0.0, 1.0) * maxval).astype(np.int64)
    out = bytearray()
    out += (b"P5" if binary else b"P2") + b"\n"
    out += f"{width} {height}\n{maxval}\n".encode()
    if binary:
        out += levels.astype(">u2" if maxval > 255 else np.uint8).tobytes()
    else:
        out += b"\n".join(b" ".join(str(v).encode() for v in row) for row in levels) + b"\n"
    Path(path).write_bytes(bytes(out))


def read_pbm(path, spacing: float = 1.0, origin: tuple[float, ...] | None = None) -> PixelSet:
    """Read a PBM bitmap as a pixel set, honoring the background header."""
    data = Path(path).read_bytes()
    tokens, pos, comments = _tokenize_header(data, 3)
    magic = tokens[0]
    if magic not in (b"P1", b"P4"):
        raise ValueError(f"not a PBM file (magic {magic!r})")
    width, height = int(tokens[1]), int(tokens[2])
    background = False
    one_dim = False
    for c in comments:
        parts = c.split()
        if parts[:1] == [b"background"]:
            background = bool(int(parts[1]))
        if parts[:1] == [b"dim"]:
            one_dim = int(parts[1]) == 1
    if magic == b"P1":
        bits = np.array([tok for tok in data[pos:].split() if tok in (b"0", b"1")], dtype=np.int64)
        mask = bits[: width * height].reshape(height, width).astype(bool)
    else:
        pos += 1
        row_bytes = (width + 7) // 8
        raw = np.frombuffer(data[pos : pos + row_bytes * height], dtype=np.uint8)
        bits = np.unpackbits(raw.reshape(height, row_bytes), axis=1)[:, :width]
        mask = bits.astype(bool)
    if one_dim or height == 1:
        domain = GridDomain((width,), spacing, origin or (0.0,))
        return PixelSet(domain, mask.ravel(), background)
    domain = GridDomain((height, width), spacing, origin or (0.0, 0.0))
    return PixelSet(domain, mask, background)


def write_pbm(pset: PixelSet, path, binary: bool = True) -> None:
    """Write a pixel set as PBM with a one-line background header."""
    mask = pset.interior_mask
    if pset.domain.dim == 1:
        mask = mask.reshape(1, -1)
    height, width = mask.shape
    out = bytearray()
    out += (b"P4" if binary else b"P1") + b"\n"
    out += f"# background {int(pset.background)}\n".encode()
    if pset.domain.dim == 1:
        out += b"# dim 1\n"
    out += f"{width} {height}\n".encode()
    if binary:
        out += np.packbits(mask.astype(np.uint8), axis=1).tobytes()
    else:
        out += b"\n".join(b" ".join(b"1" if v else b"0" for v in row) for row in mask) + b"\n"
    Path(path).write_bytes(bytes(out))


def read_csv_field(path, spacing: float = 1.0, origin: tuple[float, ...] = (0.0,)) -> ScalarField:
    """Read a 1D field from text: one value per line, commas allowed."""
    values = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        values.extend(float(tok) for tok in line.replace(",", " ").split())
    if not values:
        raise ValueError(f"no values in {path}")
    return ScalarField(GridDomain((len(values),), spacing, origin), np.array(values))


def write_csv_field(field: ScalarField, path) -> None:
    if field.domain.dim != 1:
        raise ValueError("CSV output is for 1D fields")
    Path(path).write_text("\n".join(repr(float(v)) for v in field.values) + "\n")


def read_field(path, spacing: float = 1.0) -> ScalarField:
    """Dispatch by extension: .pgm for 2D images, anything else as 1D text."""
    if str(path).lower().endswith(".pgm"):
        return read_pgm(path, spacing)
    return read_csv_field(path, spacing)


def write_field(field: ScalarField, path) -> None:
    if str(path).lower().endswith(".pgm"):
        write_pgm(field, path)
    else:
        write_csv_field(field, path)

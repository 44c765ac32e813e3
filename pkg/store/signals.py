"""
signals.py

Signal files: plain PGM (P2) and CSV numeric grids.

PGM gray levels map to reals unchanged (0..maxval, no rescaling), so the
model's variances are in squared gray-level units. Binary PGM (P5) is
accepted on read. CSV keeps full float precision through repr().
"""

import csv
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from utils.errors import DomainError, ParseError, SignalIOError
from wavelet.packets import as_signal, depth_of_side

FORMATS = ("pgm", "csv")


def _format_of(path: Path, fmt: Optional[str]) -> str:
    fmt = (fmt or path.suffix.lstrip(".")).lower()
    if fmt not in FORMATS:
        raise DomainError(f"{path}: unknown signal format {fmt!r}; expected one of {', '.join(FORMATS)}")
    return fmt


def _check_side(values: np.ndarray, path: Path, d_max: Optional[int]):
    rows, cols = values.shape
    if rows != cols:
        raise ParseError(f"signal must be square, got {rows}x{cols}", path)
    try:
        depth = depth_of_side(rows)
    except DomainError:
        raise ParseError(f"side must be a power of two, got {rows}", path) from None
    if d_max is not None and depth != d_max:
        raise ParseError(f"side {rows} does not match d_max={d_max} (side {1 << d_max})", path)


def _pgm_tokens(text: str) -> List[Tuple[str, int, int]]:
    """Whitespace-separated tokens with their 1-based line and column; '#' starts a comment."""
    tokens = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0]
        column = 0
        for piece in line.split():
            column = line.index(piece, column)
            tokens.append((piece, line_no, column + 1))
            column += len(piece)
    return tokens


def _parse_int(token: Tuple[str, int, int], path: Path, what: str) -> int:
    text, line, column = token
    try:
        return int(text)
    except ValueError:
        raise ParseError(f"expected integer {what}, got {text!r}", path, line, column) from None


def _read_pgm(path: Path) -> np.ndarray:
    data = path.read_bytes()
    magic = data[:2]
    if magic == b"P5":
        return _read_binary_pgm(data, path)
    if magic != b"P2":
        raise ParseError(f"unsupported PGM magic {magic!r}; expected P2 or P5", path, 1, 1)

    tokens = _pgm_tokens(data.decode("ascii", errors="replace"))
    if len(tokens) < 4:
        raise ParseError("truncated PGM header", path, 1, 1)
    width = _parse_int(tokens[1], path, "width")
    height = _parse_int(tokens[2], path, "height")
    max_value = _parse_int(tokens[3], path, "maxval")
    if width <= 0 or height <= 0 or not 0 < max_value < 65536:
        raise ParseError(f"invalid PGM header {width} {height} {max_value}", path, tokens[1][1], tokens[1][2])

    pixels = tokens[4:]
    if len(pixels) != width * height:
        line, column = (pixels[-1][1], pixels[-1][2]) if pixels else (tokens[3][1], tokens[3][2])
        raise ParseError(f"expected {width * height} gray levels, found {len(pixels)}", path, line, column)
    values = np.empty(width * height)
    for n, token in enumerate(pixels):
        value = _parse_int(token, path, "gray level")
        if not 0 <= value <= max_value:
            raise ParseError(f"gray level {value} outside [0, {max_value}]", path, token[1], token[2])
        values[n] = value
    return values.reshape(height, width)


def _read_binary_pgm(data: bytes, path: Path) -> np.ndarray:
    fields = []
    pos = 2
    while len(fields) < 3:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ParseError("truncated PGM header", path)
        try:
            fields.append(int(data[start:pos]))
        except ValueError:
            raise ParseError(f"invalid PGM header field {data[start:pos]!r}", path) from None
    pos += 1  # single whitespace byte before the raster
    width, height, max_value = fields
    dtype = np.dtype(">u2") if max_value > 255 else np.dtype("u1")
    raster = data[pos:pos + width * height * dtype.itemsize]
    if len(raster) != width * height * dtype.itemsize:
        raise ParseError(f"expected {width * height} gray levels in binary raster", path)
    return np.frombuffer(raster, dtype=dtype).astype(np.float64).reshape(height, width)


def _read_csv(path: Path) -> np.ndarray:
    rows = []
    with open(path, newline="") as f:
        for line_no, row in enumerate(csv.reader(f), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            values = []
            for column, cell in enumerate(row, start=1):
                try:
                    values.append(float(cell))
                except ValueError:
                    raise ParseError(f"expected a number, got {cell!r}", path, line_no, column) from None
            if rows and len(values) != len(rows[0]):
                raise ParseError(f"row has {len(values)} values, expected {len(rows[0])}", path, line_no, 1)
            rows.append(values)
    if not rows:
        raise ParseError("empty signal file", path)
    return np.array(rows)


def read_signal(path, fmt: str = None, d_max: int = None) -> np.ndarray:
    """Read a square 2^d_max x 2^d_max signal from a PGM or CSV file."""
    path = Path(path)
    fmt = _format_of(path, fmt)
    try:
        values = _read_pgm(path) if fmt == "pgm" else _read_csv(path)
    except OSError as e:
        raise SignalIOError(path, e.strerror or e) from e
    _check_side(values, path, d_max)
    if not np.all(np.isfinite(values)):
        raise ParseError("signal contains non-finite values", path)
    return values


def write_signal(path, x, fmt: str = None) -> Path:
    """
    Write a signal as CSV (exact) or plain PGM.

    PGM stores integers: values are rounded to the nearest gray level and
    must be non-negative; maxval is 255 or the largest level if higher.
    """
    path = Path(path)
    fmt = _format_of(path, fmt)
    signal = as_signal(x)
    try:
        if fmt == "csv":
            with open(path, "w", newline="") as f:
                writer = csv.writer(f)
                for row in signal:
                    writer.writerow([repr(float(v)) for v in row])
        else:
            levels = np.rint(signal).astype(np.int64)
            if levels.min() < 0:
                raise DomainError(f"{path}: PGM cannot store negative values (min {signal.min():g})")
            max_value = max(255, int(levels.max()))
            if max_value > 65535:
                raise DomainError(f"{path}: PGM cannot store values above 65535 (max {signal.max():g})")
            side = signal.shape[0]
            lines = ["P2", f"{side} {side}", str(max_value)]
            lines.extend(" ".join(str(v) for v in row) for row in levels)
            path.write_text("\n".join(lines) + "\n")
    except OSError as e:
        raise SignalIOError(path, e.strerror or e) from e
    return path

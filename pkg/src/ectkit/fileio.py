"""CSV and PGM readers/writers for images, frames, and matrices.

Values are written with ``repr`` (shortest round-tripping decimal), so a
write/read cycle reproduces them bit for bit.  Readers raise
:class:`FileFormatError` with 1-based line/column positions on malformed
input.
"""

import numpy as np

__all__ = [
    "FileFormatError",
    "write_image_csv",
    "read_image_csv",
    "write_image_pgm",
    "write_frames_csv",
    "read_frames_csv",
    "write_calibration_csv",
    "read_calibration_csv",
    "write_sensitivity_csv",
    "read_sensitivity_csv",
]


class FileFormatError(ValueError):
    """Malformed input file; message carries line/column diagnostics."""


def _fmt_row(values):
    return ",".join(repr(float(v)) for v in values)


def _parse_row(line, lineno, expected=None, path=""):
    tokens = line.rstrip("\n").split(",")
    if expected is not None and len(tokens) != expected:
        raise FileFormatError(
            f"{path}: line {lineno}: expected {expected} values, found {len(tokens)}"
        )
    out = np.empty(len(tokens))
    for col, tok in enumerate(tokens, start=1):
        try:
            out[col - 1] = float(tok)
        except ValueError:
            raise FileFormatError(
                f"{path}: line {lineno}, column {col}: non-numeric token {tok!r}"
            ) from None
    return out


def write_image_csv(path, image, grid):
    """Write an active-pixel vector as a full side x side CSV (0 outside)."""
    full = grid.to_image(np.asarray(image, dtype=float))
    with open(path, "w") as fh:
        for row in full:
            fh.write(_fmt_row(row) + "\n")


def read_image_csv(path, grid=None):
    """Read a square image CSV; with a grid, return the active-pixel vector."""
    rows = []
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines:
        raise FileFormatError(f"{path}: empty image file")
    width = len(lines[0].split(","))
    for lineno, line in enumerate(lines, start=1):
        rows.append(_parse_row(line, lineno, expected=width, path=str(path)))
    img = np.asarray(rows)
    if img.shape[0] != img.shape[1]:
        raise FileFormatError(
            f"{path}: image must be square, got {img.shape[0]} rows x {img.shape[1]} columns"
        )
    if grid is None:
        return img
    if img.shape != (grid.side, grid.side):
        raise FileFormatError(
            f"{path}: image is {img.shape[0]}x{img.shape[1]}, grid expects {grid.side}x{grid.side}"
        )
    return grid.from_image(img)


def write_image_pgm(path, image, grid, maxval=255):
    """Write a [0, 1] image as plain PGM (P2); values are round(maxval * g)."""
    full = grid.to_image(np.asarray(image, dtype=float))
    levels = np.clip(np.rint(full * maxval), 0, maxval).astype(int)
    with open(path, "w") as fh:
        fh.write("P2\n")
        fh.write(f"{grid.side} {grid.side}\n")
        fh.write(f"{maxval}\n")
        for row in levels:
            fh.write(" ".join(str(v) for v in row) + "\n")


def write_frames_csv(path, frames):
    """Write measurement frames, one frame per row."""
    frames = np.atleast_2d(np.asarray(frames, dtype=float))
    with open(path, "w") as fh:
        for row in frames:
            fh.write(_fmt_row(row) + "\n")


def read_frames_csv(path):
    """Read measurement frames, shape (n_frames, n_pairs)."""
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines:
        raise FileFormatError(f"{path}: no frames in file")
    width = len(lines[0].split(","))
    rows = [
        _parse_row(line, lineno, expected=width, path=str(path))
        for lineno, line in enumerate(lines, start=1)
    ]
    return np.asarray(rows)


def write_calibration_csv(path, cal):
    """Write a calibration pair as two rows: low fill, then high fill."""
    with open(path, "w") as fh:
        fh.write(_fmt_row(cal.c_low) + "\n")
        fh.write(_fmt_row(cal.c_high) + "\n")


def read_calibration_csv(path):
    """Read a two-row calibration file into a :class:`CalibrationPair`."""
    from .forward import CalibrationPair

    rows = read_frames_csv(path)
    if rows.shape[0] != 2:
        raise FileFormatError(
            f"{path}: calibration file must have exactly 2 rows, found {rows.shape[0]}"
        )
    return CalibrationPair(c_low=rows[0], c_high=rows[1])


def write_sensitivity_csv(path, S):
    """Write a sensitivity matrix with a 'M,P' header line."""
    S = np.asarray(S, dtype=float)
    with open(path, "w") as fh:
        fh.write(f"{S.shape[0]},{S.shape[1]}\n")
        for row in S:
            fh.write(_fmt_row(row) + "\n")


def read_sensitivity_csv(path):
    """Read a sensitivity matrix, validating the header against the body."""
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines:
        raise FileFormatError(f"{path}: empty sensitivity file")
    header = lines[0].split(",")
    if len(header) != 2:
        raise FileFormatError(
            f"{path}: line 1: header must be 'M,P', found {lines[0]!r}"
        )
    try:
        n_rows, n_cols = int(header[0]), int(header[1])
    except ValueError:
        raise FileFormatError(
            f"{path}: line 1: header must hold two integers, found {lines[0]!r}"
        ) from None
    body = lines[1:]
    if len(body) != n_rows:
        raise FileFormatError(
            f"{path}: header declares {n_rows} rows but file has {len(body)}"
        )
    rows = [
        _parse_row(line, lineno, expected=n_cols, path=str(path))
        for lineno, line in enumerate(body, start=2)
    ]
    return np.asarray(rows)

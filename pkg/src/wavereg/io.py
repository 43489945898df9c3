"""Image file ingestion (PGM/PNG) and CSV emission for experiment records.

Only 8-bit grayscale data round-trips losslessly; color PNG input is
converted to luminance with a warning, and higher bit depths are
rejected so quantization never happens silently.
"""

from __future__ import annotations

import math
import warnings
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import FormatError

CSV_HEADER = (
    "scenario,true_sx,true_sy,true_theta,true_sigma,"
    "est_sx,est_sy,est_theta,est_sigma,psnr_db,mse,ncc,iters,outlier,ms"
)


def _read_pgm(path: Path) -> np.ndarray:
    data = path.read_bytes()
    if data[:2] != b"P5":
        raise FormatError(f"{path}: not a binary PGM (missing P5 magic at offset 0)")
    pos = 2
    fields: list[int] = []
    while len(fields) < 3:
        # skip whitespace and '#' comment lines between header tokens
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        token = data[start:pos]
        if not token.isdigit():
            raise FormatError(f"{path}: bad header token {token!r} at offset {start}")
        fields.append(int(token))
    width, height, maxval = fields
    if maxval > 255:
        raise FormatError(f"{path}: {maxval + 1}-level PGM unsupported (8-bit only)")
    pos += 1  # single whitespace byte after maxval
    expected = width * height
    raster = data[pos : pos + expected]
    if len(raster) != expected:
        raise FormatError(
            f"{path}: raster truncated at offset {pos + len(raster)} "
            f"({len(raster)} of {expected} bytes)"
        )
    return np.frombuffer(raster, dtype=np.uint8).reshape(height, width).astype(np.float64)


def _read_png(path: Path) -> np.ndarray:
    with Image.open(path) as im:
        if im.mode in ("I", "I;16", "I;16B", "I;16L"):
            raise FormatError(f"{path}: 16-bit PNG unsupported (8-bit only)")
        if im.mode in ("RGB", "RGBA", "P"):
            warnings.warn(f"{path}: converting color image to luminance")
            rgb = np.asarray(im.convert("RGB"), dtype=np.float64)
            return 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
        if im.mode not in ("L", "1"):
            raise FormatError(f"{path}: unsupported PNG mode {im.mode!r}")
        return np.asarray(im.convert("L"), dtype=np.float64)


def read_image(path) -> np.ndarray:
    """Load an 8-bit grayscale PGM (P5) or PNG as a float64 grid."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such image file: {path}")
    suffix = path.suffix.lower()
    if suffix == ".pgm":
        return _read_pgm(path)
    if suffix == ".png":
        return _read_png(path)
    raise FormatError(f"{path}: unsupported extension {suffix!r} (need .pgm or .png)")


def write_image(path, grid: np.ndarray) -> None:
    """Write a grid as 8-bit grayscale; values are clipped to [0, 255]."""
    path = Path(path)
    pixels = np.clip(np.rint(np.asarray(grid, dtype=np.float64)), 0, 255).astype(np.uint8)
    suffix = path.suffix.lower()
    if suffix == ".pgm":
        h, w = pixels.shape
        header = f"P5\n{w} {h}\n255\n".encode("ascii")
        path.write_bytes(header + pixels.tobytes())
    elif suffix == ".png":
        Image.fromarray(pixels, mode="L").save(path)
    else:
        raise FormatError(f"{path}: unsupported extension {suffix!r} (need .pgm or .png)")


def _fmt(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return repr(float(x))


def emit_csv(records, path) -> None:
    """Write experiment records with a fixed header; deterministic bytes."""
    lines = [CSV_HEADER]
    for rec in records:
        lines.append(
            ",".join(
                [
                    rec.scenario,
                    _fmt(rec.true_params.t_x),
                    _fmt(rec.true_params.t_y),
                    _fmt(rec.true_params.theta),
                    _fmt(rec.true_params.sigma),
                    _fmt(rec.est_params.t_x),
                    _fmt(rec.est_params.t_y),
                    _fmt(rec.est_params.theta),
                    _fmt(rec.est_params.sigma),
                    _fmt(rec.psnr_db),
                    _fmt(rec.mse),
                    _fmt(rec.ncc),
                    str(rec.iterations),
                    str(int(rec.outlier)),
                    _fmt(rec.elapsed_s * 1000.0),
                ]
            )
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")

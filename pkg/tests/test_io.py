"""Image decoding round-trips and CSV emission."""

import math

import numpy as np
import pytest
from PIL import Image

from wavereg import (
    ExperimentRecord,
    FormatError,
    SimilarityParams,
    emit_csv,
    read_image,
    write_image,
)
from wavereg.io import CSV_HEADER

RNG = np.random.default_rng(99)


def test_pgm_round_trip(tmp_path):
    img = RNG.integers(0, 256, (32, 48)).astype(float)
    path = tmp_path / "img.pgm"
    write_image(path, img)
    assert np.array_equal(read_image(path), img)


def test_pgm_header_comments(tmp_path):
    path = tmp_path / "c.pgm"
    path.write_bytes(b"P5\n# a comment\n2 2\n# another\n255\n\x01\x02\x03\x04")
    assert np.array_equal(read_image(path), [[1, 2], [3, 4]])


def test_pgm_rejects_bad_inputs(tmp_path):
    bad_magic = tmp_path / "a.pgm"
    bad_magic.write_bytes(b"P2\n2 2\n255\n....")
    with pytest.raises(FormatError):
        read_image(bad_magic)
    deep = tmp_path / "b.pgm"
    deep.write_bytes(b"P5\n2 2\n65535\n" + b"\x00" * 8)
    with pytest.raises(FormatError):
        read_image(deep)
    short = tmp_path / "c.pgm"
    short.write_bytes(b"P5\n4 4\n255\n\x00\x01")
    with pytest.raises(FormatError):
        read_image(short)


def test_png_round_trip(tmp_path):
    img = RNG.integers(0, 256, (16, 16)).astype(float)
    path = tmp_path / "img.png"
    write_image(path, img)
    assert np.array_equal(read_image(path), img)


def test_png_16bit_rejected(tmp_path):
    path = tmp_path / "deep.png"
    Image.fromarray(np.zeros((8, 8), dtype=np.uint16)).save(path)
    with pytest.raises(FormatError):
        read_image(path)


def test_png_color_converts_to_luminance_with_warning(tmp_path):
    rgb = np.zeros((8, 8, 3), dtype=np.uint8)
    rgb[..., 0] = 100  # red only
    path = tmp_path / "color.png"
    Image.fromarray(rgb, mode="RGB").save(path)
    with pytest.warns(UserWarning):
        gray = read_image(path)
    assert gray[0, 0] == pytest.approx(0.299 * 100)


def test_unknown_extension_and_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_image(tmp_path / "nope.pgm")
    bad = tmp_path / "img.tiff"
    bad.write_bytes(b"")
    with pytest.raises(FormatError):
        read_image(bad)
    with pytest.raises(FormatError):
        write_image(tmp_path / "o.bmp", np.zeros((4, 4)))


def test_write_clips_to_byte_range(tmp_path):
    path = tmp_path / "clip.pgm"
    write_image(path, np.array([[-5.0, 300.0], [12.4, 12.6]]))
    assert np.array_equal(read_image(path), [[0, 255], [12, 13]])


def record(name="s", psnr=42.0, mse=4.0, outlier=False):
    return ExperimentRecord(
        scenario=name,
        true_params=SimilarityParams(1.0, 0.0, 0.25, 0.75),
        est_params=SimilarityParams(1.0, 0.0, 0.25, 0.75),
        psnr_db=psnr,
        mse=mse,
        ncc=2.0,
        iterations=7,
        outlier=outlier,
        elapsed_s=0.125,
    )


def test_csv_header_and_layout(tmp_path):
    path = tmp_path / "out.csv"
    emit_csv([record()], path)
    lines = path.read_text(encoding="ascii").splitlines()
    assert lines[0] == CSV_HEADER
    assert lines[0] == (
        "scenario,true_sx,true_sy,true_theta,true_sigma,"
        "est_sx,est_sy,est_theta,est_sigma,psnr_db,mse,ncc,iters,outlier,ms"
    )
    fields = lines[1].split(",")
    assert fields[0] == "s"
    assert fields[12] == "7"
    assert fields[13] == "0"
    assert float(fields[14]) == pytest.approx(125.0)


def test_csv_deterministic_and_special_values(tmp_path):
    recs = [record(psnr=math.inf, mse=0.0), record(name="nanny", psnr=math.nan)]
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    emit_csv(recs, p1)
    emit_csv(recs, p2)
    assert p1.read_bytes() == p2.read_bytes()
    body = p1.read_text(encoding="ascii")
    assert "inf" in body and "nan" in body

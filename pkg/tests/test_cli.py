"""Command-line interface behavior and exit codes."""

import numpy as np
import pytest

from wavereg import synthetic_texture, write_image
from wavereg.cli import main
from wavereg.io import CSV_HEADER


@pytest.fixture()
def image_path(tmp_path):
    path = tmp_path / "img.pgm"
    write_image(path, synthetic_texture(64, 0))
    return path


def test_register_identity(image_path, capsys):
    code = main(["register", str(image_path), str(image_path), "--tau", "2.0"])
    out = capsys.readouterr().out
    assert code == 0
    assert "sigma=1 theta=0 tx=0 ty=0" in out


def test_register_report_file(image_path, tmp_path, capsys):
    report = tmp_path / "report.txt"
    code = main(
        ["register", str(image_path), str(image_path), "--tau", "2.0", "--out", str(report)]
    )
    assert code == 0
    text = report.read_text(encoding="ascii")
    assert "tx=0.0" in text and "converged=True" in text


def test_register_missing_file_exits_2(tmp_path, capsys):
    code = main(["register", str(tmp_path / "no.pgm"), str(tmp_path / "no.pgm")])
    assert code == 2
    assert "error" in capsys.readouterr().err


def test_bad_threshold_flag_exits_2(image_path, capsys):
    code = main(
        ["register", str(image_path), str(image_path), "--threshold", "half"]
    )
    assert code == 2


def test_non_pow2_input_is_cropped(tmp_path, capsys):
    path = tmp_path / "odd.pgm"
    write_image(path, synthetic_texture(80, 1)[:80, :70])
    code = main(["register", str(path), str(path), "--tau", "2.0"])
    captured = capsys.readouterr()
    assert code == 0
    assert "cropped" in captured.err


def test_shift_writes_quantized_planes(image_path, tmp_path, capsys):
    out = tmp_path / "planes.npz"
    code = main(
        ["shift", str(image_path), "--dx", "0.33", "--dy", "-0.5", "--out", str(out)]
    )
    assert code == 0
    assert "dx=0.328125" in capsys.readouterr().out
    data = np.load(out)
    assert data["dx"] == 21 / 64
    assert data["dy"] == -0.5
    assert data["a"].shape == (2048, 2048)


def test_sweep_runs_toml_scenarios(tmp_path, capsys):
    spec = tmp_path / "sweep.toml"
    spec.write_text(
        "\n".join(
            [
                "[[scenario]]",
                'name = "ident"',
                'image = "builtin:texture:128:1"',
                'mode = "exact"',
                "tau = 2.0",
                "[[scenario]]",
                'name = "shifted"',
                'image = "builtin:texture:128:1"',
                "tx = 0.5",
                "ty = -0.25",
                'mode = "exact"',
                "tau = 2.0",
            ]
        ),
        encoding="ascii",
    )
    out = tmp_path / "results.csv"
    code = main(["sweep", str(spec), "--out", str(out)])
    assert code == 0
    lines = out.read_text(encoding="ascii").splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 3
    assert lines[1].startswith("ident,")
    est = lines[2].split(",")
    assert (est[5], est[6]) == ("0.5", "-0.25")


def test_sweep_without_scenarios_exits_2(tmp_path, capsys):
    empty = tmp_path / "empty.toml"
    empty.write_text("", encoding="ascii")
    assert main(["sweep", str(empty)]) == 2


def test_unknown_builtin_exits_2(tmp_path, capsys):
    spec = tmp_path / "bad.toml"
    spec.write_text(
        '[[scenario]]\nname = "x"\nimage = "builtin:mandel:64"\n', encoding="ascii"
    )
    assert main(["sweep", str(spec), "--out", str(tmp_path / "o.csv")]) == 2


def test_usage_error_exits_2(capsys):
    assert main(["frobnicate"]) == 2

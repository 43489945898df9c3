"""Command-line front end: registration, in-band shifting, experiment sweeps.

The CLI is a thin shell over the library: every printed number comes
straight from the corresponding library call.  Exit codes: 0 success,
1 degenerate input, 2 usage or I/O error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import (
    ContractError,
    DegenerateInputError,
    DimensionError,
    EstimationError,
    FormatError,
    LevelRangeError,
)
from .haar import compute_difference_field, extract_pow2_subregion, forward_haar
from .inband import HORIZONTAL, VERTICAL, quantize_shift, shifted_detail_pair
from .estimate import RegisterConfig, SimilarityParams, register_similarity
from .harness import (
    PAPER_STYLE,
    ScenarioSpec,
    oriented_texture,
    pentagon_image,
    run_experiment,
    shapes_image,
    synthetic_texture,
)
from .io import emit_csv, read_image

log = logging.getLogger("wavereg")

EXIT_OK = 0
EXIT_DEGENERATE = 1
EXIT_USAGE = 2


def _configure_logging() -> None:
    level_name = os.environ.get("INBAND_LOG", "").upper()
    if level_name:
        level = getattr(logging, level_name, logging.INFO)
        logging.basicConfig(level=level, format="%(name)s %(levelname)s %(message)s")


def _load_square(path: str) -> np.ndarray:
    img = read_image(path)
    cropped = extract_pow2_subregion(img)
    if cropped.shape != img.shape:
        print(
            f"note: {path}: cropped {img.shape[0]}x{img.shape[1]} input "
            f"to centered {cropped.shape[0]}x{cropped.shape[1]} subregion",
            file=sys.stderr,
        )
    return cropped


def _parse_threshold(value: str) -> tuple[str, float | None]:
    if value == "universal":
        return "universal", None
    if value.startswith("frac="):
        frac = float(value[5:])
        if not 0.0 <= frac <= 1.0:
            raise argparse.ArgumentTypeError(f"fraction {frac} outside [0, 1]")
        return "keep-fraction", frac
    raise argparse.ArgumentTypeError(f"threshold must be 'universal' or 'frac=P', got {value!r}")


def _add_estimator_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--tau", type=float, default=1.9, help="NCC acceptance tolerance")
    parser.add_argument("--k", type=int, default=None, help="reduction level (default: auto)")
    parser.add_argument("--h-max", type=int, default=6, help="shift lattice is 1/2**h_max")
    parser.add_argument("--bins", type=int, default=180, help="slope histogram bins")
    parser.add_argument(
        "--threshold", type=_parse_threshold, default=("universal", None),
        help="coefficient threshold: 'universal' or 'frac=P'",
    )
    parser.add_argument(
        "--sparsity", type=float, default=None,
        help="keep only this fraction of detail coefficients",
    )


def _config_from_args(args) -> RegisterConfig:
    mode, fraction = args.threshold
    return RegisterConfig(
        tau=args.tau,
        k=args.k,
        h_max=args.h_max,
        bins=args.bins,
        threshold_mode=mode,
        threshold_fraction=fraction,
        sparsity=args.sparsity,
    )


def _cmd_register(args) -> int:
    reference = _load_square(args.reference)
    sensed = _load_square(args.sensed)
    report = register_similarity(reference, sensed, _config_from_args(args))
    p = report.params
    print(f"sigma={p.sigma:g} theta={p.theta:g} tx={p.t_x:g} ty={p.t_y:g}")
    log.info("ncc=%.6f iterations=%d converged=%s", report.ncc, report.iterations, report.converged)
    if args.out:
        lines = [
            f"sigma={p.sigma!r}",
            f"theta={p.theta!r}",
            f"tx={p.t_x!r}",
            f"ty={p.t_y!r}",
            f"ncc={report.ncc!r}",
            f"iterations={report.iterations}",
            f"converged={report.converged}",
            f"elapsed_s={report.elapsed_s!r}",
        ]
        Path(args.out).write_text("\n".join(lines) + "\n", encoding="ascii")
    return EXIT_OK


def _cmd_shift(args) -> int:
    img = _load_square(args.image)
    pyr = forward_haar(img)
    dfield = compute_difference_field(pyr, pyr.levels)
    shift_x = quantize_shift(args.dx, args.h_max, HORIZONTAL)
    shift_y = quantize_shift(args.dy, args.h_max, VERTICAL)
    plane_a, plane_b = shifted_detail_pair(dfield, shift_x, shift_y, args.k)
    print(
        f"quantized dx={shift_x.value:g} dy={shift_y.value:g} "
        f"k={args.k} plane_side={plane_a.values.shape[0]}"
    )
    if args.out:
        np.savez(args.out, a=plane_a.values, b=plane_b.values,
                 dx=shift_x.value, dy=shift_y.value, k=args.k)
    return EXIT_OK


def _load_source(ref: str, base: Path) -> np.ndarray:
    """Scenario image: a file path, or builtin:{texture|oriented|pentagon|shapes}:side[:seed]."""
    if ref.startswith("builtin:"):
        parts = ref.split(":")
        kind = parts[1]
        side = int(parts[2])
        seed = int(parts[3]) if len(parts) > 3 else 0
        makers = {
            "texture": synthetic_texture,
            "oriented": oriented_texture,
            "pentagon": pentagon_image,
            "shapes": shapes_image,
        }
        if kind not in makers:
            raise ContractError(f"unknown builtin source {kind!r}")
        return makers[kind](side, seed)
    return read_image(base / ref)


def _scenario_from_table(name: str, table: dict, base: Path, defaults: RegisterConfig) -> ScenarioSpec:
    params = SimilarityParams(
        sigma=table.get("sigma", 1.0),
        theta=table.get("theta", 0.0),
        t_x=table.get("tx", 0.0),
        t_y=table.get("ty", 0.0),
    )
    config = RegisterConfig(
        tau=table.get("tau", defaults.tau),
        k=table.get("k", defaults.k),
        h_max=table.get("h_max", defaults.h_max),
        bins=table.get("bins", defaults.bins),
        threshold_mode=defaults.threshold_mode,
        threshold_fraction=defaults.threshold_fraction,
    )
    return ScenarioSpec(
        name=table.get("name", name),
        source=_load_source(table["image"], base),
        params=params,
        mode=table.get("mode", PAPER_STYLE),
        snr_db=table.get("snr_db"),
        sparsity=table.get("sparsity", defaults.sparsity),
        seed=table.get("seed", 0),
        config=config,
    )


def _cmd_sweep(args) -> int:
    path = Path(args.spec)
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    tables = doc.get("scenario")
    if not tables:
        raise ContractError(f"{path}: no [[scenario]] tables found")
    defaults = _config_from_args(args)
    specs = [
        _scenario_from_table(f"scenario{i}", table, path.parent, defaults)
        for i, table in enumerate(tables)
    ]
    if args.mode is not None:
        specs = [replace(s, mode=args.mode) for s in specs]
    if args.seed is not None:
        specs = [replace(s, seed=args.seed) for s in specs]
    records = run_experiment(specs)
    emit_csv(records, args.out)
    outliers = sum(r.outlier for r in records)
    print(f"wrote {len(records)} records to {args.out} ({outliers} outliers)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wavereg",
        description="Sub-pixel image registration on Haar wavelet detail coefficients.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    reg = sub.add_parser("register", help="estimate (sigma, theta, tx, ty) between two images")
    reg.add_argument("reference", help="reference image (PGM/PNG)")
    reg.add_argument("sensed", help="sensed image (PGM/PNG)")
    _add_estimator_flags(reg)
    reg.add_argument("--out", default=None, help="write a key=value report file")
    reg.set_defaults(func=_cmd_register)

    shf = sub.add_parser("shift", help="write in-band shifted detail planes of an image")
    shf.add_argument("image", help="input image (PGM/PNG)")
    shf.add_argument("--dx", type=float, required=True, help="horizontal shift in pixels")
    shf.add_argument("--dy", type=float, required=True, help="vertical shift in pixels")
    shf.add_argument("--k", type=int, default=1, help="reduction level")
    shf.add_argument("--h-max", type=int, default=6, help="shift lattice is 1/2**h_max")
    shf.add_argument("--out", default=None, help="write planes to this .npz file")
    shf.set_defaults(func=_cmd_shift)

    swp = sub.add_parser("sweep", help="run a TOML scenario file and emit CSV")
    swp.add_argument("spec", help="TOML file with [[scenario]] tables")
    _add_estimator_flags(swp)
    swp.add_argument("--mode", choices=["paper", "exact"], default=None,
                     help="override synthesis mode (unused if scenarios set it)")
    swp.add_argument("--seed", type=int, default=None, help="override scenario seeds")
    swp.add_argument("--out", default="results.csv", help="output CSV path")
    swp.set_defaults(func=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    _configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (DegenerateInputError, EstimationError, DimensionError, LevelRangeError) as exc:
        print(f"error: degenerate input: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (FormatError, ContractError, FileNotFoundError, OSError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

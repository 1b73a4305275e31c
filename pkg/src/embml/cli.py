"""Batch command-line interface.

One subcommand per experiment family:

  calibrate         null-ensemble thresholds at a target false-alarm rate
  pfa-sweep         empirical Pfa under off-nominal clutter (CFAR check)
  pd-curve          detection probability versus SCNR
  mismatch-contour  detection probability over the (cos^2 phi, SCNR) grid
  convergence       mean EM objective change per iteration
  ingest-run        sliding-window evaluation of a recorded data cube

Settings come from an optional INI config file (--config) with CLI flags
taking precedence. Exit codes: 0 success, 2 invalid configuration or
arguments, 3 file I/O or format failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .config import (
    COMMANDS,
    ExperimentSpec,
    ParseError,
    ValidationError,
    parse_config,
)
from .cube import FormatError, ingest_cube, sliding_window_run
from .curves import IoError, write_convergence, write_curve
from .harness import (
    calibrate,
    cfar_sweep,
    convergence_study,
    mismatch_contour,
    order_labels,
    pd_curve,
)

__all__ = ["main", "build_parser", "run_spec"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embml",
        description="Monte Carlo characterization of adaptive radar detectors.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI config file")
    common.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    common.add_argument("--workers", type=int, help="parallel worker processes")
    common.add_argument("--out", help="output CSV path")
    common.add_argument("--pfa", type=float, help="target false-alarm probability")
    common.add_argument("--trials", type=int, help="trials per grid point")
    common.add_argument(
        "--calibration-trials", type=int, help="null trials for thresholding"
    )
    common.add_argument(
        "--detectors", nargs="+", metavar="LABEL",
        help="detector labels (e.g. glrt amf rao ace em-bml-d5 benchmark)",
    )
    common.add_argument(
        "--l-max", type=int, nargs="+", metavar="L",
        help="EM iteration caps (defines em-bml-d variants / trace depth)",
    )
    for flag, helptext in (
        ("--n", "pulses per coherent processing interval"),
        ("--k", "secondary data vectors"),
    ):
        common.add_argument(flag, type=int, help=helptext)
    for flag, helptext in (
        ("--rho", "clutter one-lag correlation"),
        ("--cnr", "clutter-to-noise ratio, dB"),
        ("--doppler", "normalized target Doppler frequency"),
        ("--scnr", "scenario signal-to-clutter-plus-noise ratio, dB"),
        ("--cos-sq-phi", "scenario steering mismatch cos^2 phi"),
    ):
        common.add_argument(flag, type=float, help=helptext)

    descriptions = {
        "calibrate": "estimate detection thresholds from a null ensemble",
        "pfa-sweep": "empirical Pfa across CNR and rho grids (CFAR check)",
        "pd-curve": "detection probability versus SCNR",
        "mismatch-contour": "Pd over the (cos^2 phi, SCNR) grid",
        "convergence": "mean EM objective change per iteration",
        "ingest-run": "sliding-window detection run on a recorded cube",
    }
    subparsers = {
        name: sub.add_parser(name, parents=[common], help=descriptions[name])
        for name in COMMANDS
    }

    grid = {"type": float, "nargs": "+"}
    subparsers["pfa-sweep"].add_argument(
        "--cnr-grid", metavar="DB", **grid, help="CNR grid, dB"
    )
    subparsers["pfa-sweep"].add_argument(
        "--rho-grid", metavar="RHO", **grid, help="one-lag correlation grid"
    )
    for name in ("pd-curve", "mismatch-contour", "convergence"):
        subparsers[name].add_argument(
            "--scnr-grid", metavar="DB", **grid, help="SCNR grid, dB"
        )
    subparsers["mismatch-contour"].add_argument(
        "--cos-sq-phi-grid", metavar="C", **grid, help="cos^2 phi grid"
    )
    cube = subparsers["ingest-run"]
    cube.add_argument("--cube", help="cube file path")
    cube.add_argument(
        "--cube-format", choices=("interleaved-binary", "csv"),
        help="cube file encoding",
    )
    cube.add_argument("--cut-bin", type=int, help="range bin under test")
    cube.add_argument("--eval-bin", type=int, help="range bin for rate estimation")
    cube.add_argument(
        "--overlap", type=int, help="pulses shared by consecutive windows"
    )
    return parser


_SCENARIO_FLAGS = {
    "n": "n",
    "k": "k",
    "rho": "rho",
    "cnr": "cnr_db",
    "doppler": "doppler",
    "scnr": "scnr_db",
    "cos_sq_phi": "cos_sq_phi",
    "seed": "master_seed",
}

_SPEC_FLAGS = {
    "workers": "workers",
    "out": "output_path",
    "pfa": "pfa",
    "trials": "trials",
    "calibration_trials": "calibration_trials",
    "l_max": "l_max",
    "detectors": "detectors",
    "scnr_grid": "scnr_grid_db",
    "cnr_grid": "cnr_grid_db",
    "rho_grid": "rho_grid",
    "cos_sq_phi_grid": "cos_sq_phi_grid",
    "cube": "cube_path",
    "cube_format": "cube_format",
    "cut_bin": "cube_cut_bin",
    "eval_bin": "cube_eval_bin",
    "overlap": "cube_overlap",
}


def _spec_from_args(args: argparse.Namespace) -> ExperimentSpec:
    text = ""
    if args.config is not None:
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as err:
            raise IoError(f"cannot read config {args.config}: {err}") from err
    spec = parse_config(text)

    scen_over = {}
    for flag, name in _SCENARIO_FLAGS.items():
        val = getattr(args, flag, None)
        if val is not None:
            scen_over[name] = val
    scenario = replace(spec.scenario, **scen_over) if scen_over else spec.scenario

    spec_over: dict = {"command": args.command, "scenario": scenario}
    for flag, name in _SPEC_FLAGS.items():
        val = getattr(args, flag, None)
        if val is not None:
            spec_over[name] = tuple(val) if isinstance(val, list) else val
    return replace(spec, **spec_over)


def _cal_trials(spec: ExperimentSpec) -> int:
    return spec.calibration_trials or spec.trials


def _run_calibrate(spec: ExperimentSpec) -> str:
    cal = calibrate(
        spec.scenario,
        spec.detectors,
        [spec.pfa],
        _cal_trials(spec),
        workers=spec.workers,
    )
    lines = ["detector,pfa,threshold"]
    for lab in order_labels(cal.table.thresholds):
        thr = cal.table.threshold(lab, spec.pfa)
        lines.append(f"{lab},{spec.pfa!r},{thr!r}")
    text = "\n".join(lines) + "\n"
    try:
        with open(spec.output_path, "w", encoding="ascii", newline="") as fh:
            fh.write(text)
    except OSError as err:
        raise IoError(f"cannot write {spec.output_path}: {err}") from err
    return f"calibrated {len(cal.table.thresholds)} detectors"


def _run_pfa_sweep(spec: ExperimentSpec) -> str:
    result = cfar_sweep(
        spec.scenario,
        spec.pfa,
        spec.cnr_grid_db,
        spec.rho_grid,
        spec.trials,
        detectors=spec.detectors,
        workers=spec.workers,
    )
    write_curve(result, spec.output_path)
    return f"swept {result.rows} clutter points"


def _run_pd_curve(spec: ExperimentSpec) -> str:
    result = pd_curve(
        spec.scenario,
        spec.pfa,
        spec.scnr_grid_db,
        spec.detectors,
        spec.trials,
        calibration_trials=spec.calibration_trials,
        workers=spec.workers,
    )
    write_curve(result, spec.output_path)
    return f"estimated Pd at {result.rows} SCNR points"


def _run_mismatch_contour(spec: ExperimentSpec) -> str:
    result = mismatch_contour(
        spec.scenario,
        spec.pfa,
        spec.scnr_grid_db,
        spec.cos_sq_phi_grid,
        spec.detectors,
        spec.trials,
        calibration_trials=spec.calibration_trials,
        workers=spec.workers,
    )
    write_curve(result, spec.output_path)
    return f"estimated Pd at {result.rows} contour points"


def _run_convergence(spec: ExperimentSpec) -> str:
    configs = [None] + [float(s) for s in spec.scnr_grid_db]
    result = convergence_study(
        spec.scenario,
        configs,
        spec.trials,
        max(spec.l_max),
        workers=spec.workers,
    )
    write_convergence(result, spec.output_path)
    return f"traced {len(result.iterations)} iterations over {len(configs)} configurations"


def _run_ingest(spec: ExperimentSpec) -> str:
    cube = ingest_cube(spec.cube_path, spec.cube_format)
    result = sliding_window_run(cube, spec)
    write_curve(result.curve, spec.output_path)
    kind = "Pfa" if result.scnr_db is None else "Pd"
    return f"evaluated {kind} over {result.window_count} windows"


_RUNNERS = {
    "calibrate": _run_calibrate,
    "pfa-sweep": _run_pfa_sweep,
    "pd-curve": _run_pd_curve,
    "mismatch-contour": _run_mismatch_contour,
    "convergence": _run_convergence,
    "ingest-run": _run_ingest,
}


def run_spec(spec: ExperimentSpec) -> str:
    """Execute one experiment spec; returns a one-line summary."""
    return _RUNNERS[spec.command](spec)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = _spec_from_args(args)
        summary = run_spec(spec)
    except (OSError, FormatError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 3
    except (ParseError, ValidationError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    print(f"{summary}; wrote {spec.output_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())

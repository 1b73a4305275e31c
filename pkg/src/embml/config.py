"""Experiment configuration: INI-style parsing, validation, serialization.

A config file has up to four sections — [run], [scenario], [grids], [cube]
— every key optional. parse_config applies the standard defaults (N=8,
K=16, rho=0.9, CNR=30 dB, Doppler 0.1, iteration cap 5), so the empty
string parses to a fully usable spec. serialize_spec writes a file that
parses back to an equal spec.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field

from .detectors import parse_detector_label
from .scenario import ScenarioConfig

__all__ = [
    "COMMANDS",
    "ParseError",
    "ValidationError",
    "ExperimentSpec",
    "parse_config",
    "serialize_spec",
]

COMMANDS = (
    "calibrate",
    "pfa-sweep",
    "pd-curve",
    "mismatch-contour",
    "convergence",
    "ingest-run",
)

# commands whose thresholds are calibrated from a null ensemble and so
# need trials >= 100/pfa somewhere in the pipeline
_CALIBRATION_COMMANDS = frozenset(COMMANDS) - {"convergence"}

_CLASSICAL_DEFAULTS = ("glrt", "amf", "rao", "ace")

_DEFAULT_SCNR_GRID = tuple(float(s) for s in range(0, 31, 2))
_DEFAULT_CNR_GRID = tuple(float(c) for c in range(30, 111, 10))
_DEFAULT_RHO_GRID = (0.5, 0.6, 0.7, 0.8, 0.9)
_DEFAULT_COS_SQ_PHI_GRID = tuple(i / 10 for i in range(0, 11))


class ParseError(ValueError):
    """Malformed config text; carries the offending line or field."""


class ValidationError(ValueError):
    """Well-formed config violating an invariant; names the invariant."""


@dataclass(frozen=True)
class ExperimentSpec:
    """A fully validated description of one batch experiment."""

    command: str = "calibrate"
    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    detectors: tuple[str, ...] = _CLASSICAL_DEFAULTS + ("em-bml-d5",)
    pfa: float = 1e-3
    trials: int = 100000
    calibration_trials: int | None = None
    l_max: tuple[int, ...] = (5,)
    scnr_grid_db: tuple[float, ...] = _DEFAULT_SCNR_GRID
    cnr_grid_db: tuple[float, ...] = _DEFAULT_CNR_GRID
    rho_grid: tuple[float, ...] = _DEFAULT_RHO_GRID
    cos_sq_phi_grid: tuple[float, ...] = _DEFAULT_COS_SQ_PHI_GRID
    output_path: str = "result.csv"
    cube_path: str | None = None
    cube_format: str = "interleaved-binary"
    cube_cut_bin: int | None = None
    cube_eval_bin: int | None = None
    cube_overlap: int = 5
    workers: int = 1

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValidationError(
                f"command must be one of {', '.join(COMMANDS)}; got {self.command!r}"
            )
        if not self.detectors:
            raise ValidationError("detector list must be nonempty")
        for lab in self.detectors:
            try:
                parse_detector_label(lab)
            except ValueError as err:
                raise ValidationError(str(err)) from None
        if not 0.0 < self.pfa < 0.5:
            raise ValidationError(f"pfa must lie in (0, 0.5); got {self.pfa}")
        if self.trials < 1:
            raise ValidationError("trials must be positive")
        if self.command in _CALIBRATION_COMMANDS:
            needed = math.ceil(100.0 / self.pfa - 1e-9)
            cal = self.calibration_trials
            if cal is None and self.command in ("calibrate", "pfa-sweep"):
                cal = self.trials
            if cal is not None and cal < needed:
                raise ValidationError(
                    f"calibration trials must be >= 100/pfa = {needed}; got {cal}"
                )
        if self.calibration_trials is not None and self.calibration_trials < 1:
            raise ValidationError("calibration_trials must be positive")
        if not self.l_max or any(l < 1 for l in self.l_max):
            raise ValidationError("l_max list must be nonempty positive integers")
        for name in ("scnr_grid_db", "cnr_grid_db", "rho_grid", "cos_sq_phi_grid"):
            if len(getattr(self, name)) == 0:
                raise ValidationError(f"{name} must be nonempty")
        for r in self.rho_grid:
            if not 0.0 <= r < 1.0:
                raise ValidationError(f"rho_grid values must lie in [0, 1); got {r}")
        for c in self.cos_sq_phi_grid:
            if not 0.0 <= c <= 1.0:
                raise ValidationError(
                    f"cos_sq_phi_grid values must lie in [0, 1]; got {c}"
                )
        if self.cube_format not in ("interleaved-binary", "csv"):
            raise ValidationError(
                "cube_format must be interleaved-binary or csv; "
                f"got {self.cube_format!r}"
            )
        if self.command == "ingest-run":
            if self.cube_overlap < 0 or self.cube_overlap >= self.scenario.n:
                raise ValidationError(
                    f"cube_overlap must lie in [0, N); got {self.cube_overlap}"
                )
            if self.cube_path is None:
                raise ValidationError("ingest-run requires cube_path")
        if self.workers < 1:
            raise ValidationError("workers must be positive")


def _default_detectors(l_max: tuple[int, ...]) -> tuple[str, ...]:
    return _CLASSICAL_DEFAULTS + tuple(f"em-bml-d{l}" for l in sorted(set(l_max)))


def _get(parser, section, key, cast, errors):
    if not parser.has_option(section, key):
        return None
    raw = parser.get(section, key)
    try:
        return cast(raw)
    except ValueError as err:
        errors.append((f"{section}.{key}", raw, str(err)))
        return None


def _float_list(raw: str) -> tuple[float, ...]:
    items = [s.strip() for s in raw.replace(",", " ").split()]
    return tuple(float(s) for s in items if s)


def _int_list(raw: str) -> tuple[int, ...]:
    items = [s.strip() for s in raw.replace(",", " ").split()]
    return tuple(int(s) for s in items if s)


def _str_list(raw: str) -> tuple[str, ...]:
    items = [s.strip() for s in raw.replace(",", " ").split()]
    return tuple(s for s in items if s)


def _optional_float(raw: str) -> float | None:
    raw = raw.strip()
    return None if raw.lower() in ("", "none") else float(raw)


_SECTIONS = ("run", "scenario", "grids", "cube")


def parse_config(text: str) -> ExperimentSpec:
    """Parse INI-style config text into a validated ExperimentSpec.

    Unknown sections or keys raise ParseError (typos should not silently
    fall back to defaults); invariant violations raise ValidationError.
    """
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as err:
        line = getattr(err, "lineno", None)
        where = f" (line {line})" if line is not None else ""
        raise ParseError(f"malformed config{where}: {err}") from err

    known = {
        "run": {
            "command", "detectors", "pfa", "trials", "calibration_trials",
            "l_max", "out", "workers",
        },
        "scenario": {
            "n", "k", "rho", "cnr_db", "noise_power", "doppler", "scnr_db",
            "cos_sq_phi", "master_seed",
        },
        "grids": {"scnr_db", "cnr_db", "rho", "cos_sq_phi"},
        "cube": {"path", "format", "cut_bin", "eval_bin", "overlap"},
    }
    for section in parser.sections():
        if section not in known:
            raise ParseError(
                f"unknown section [{section}]; expected one of "
                + ", ".join(f"[{s}]" for s in _SECTIONS)
            )
        for key in parser.options(section):
            if key not in known[section]:
                raise ParseError(f"unknown key {key!r} in section [{section}]")

    errors: list[tuple[str, str, str]] = []

    def g(sec, key, cast):
        return _get(parser, sec, key, cast, errors)

    command = g("run", "command", str)
    detectors = g("run", "detectors", _str_list)
    pfa = g("run", "pfa", float)
    trials = g("run", "trials", int)
    calibration_trials = g("run", "calibration_trials", int)
    l_max = g("run", "l_max", _int_list)
    out = g("run", "out", str)
    workers = g("run", "workers", int)

    scen_kwargs = {}
    for key, cast in (
        ("n", int), ("k", int), ("rho", float), ("cnr_db", float),
        ("noise_power", float), ("doppler", float),
        ("scnr_db", _optional_float), ("cos_sq_phi", float),
        ("master_seed", int),
    ):
        val = g("scenario", key, cast)
        if val is not None or (
            key == "scnr_db" and parser.has_option("scenario", "scnr_db")
        ):
            scen_kwargs[key] = val

    scnr_grid = g("grids", "scnr_db", _float_list)
    cnr_grid = g("grids", "cnr_db", _float_list)
    rho_grid = g("grids", "rho", _float_list)
    cos_grid = g("grids", "cos_sq_phi", _float_list)

    cube_path = g("cube", "path", str)
    cube_format = g("cube", "format", str)
    cube_cut = g("cube", "cut_bin", int)
    cube_eval = g("cube", "eval_bin", int)
    cube_overlap = g("cube", "overlap", int)

    if errors:
        field_name, raw, why = errors[0]
        raise ParseError(f"bad value for {field_name}: {raw!r} ({why})")

    try:
        scenario = ScenarioConfig(**scen_kwargs)
    except ValueError as err:
        raise ValidationError(f"scenario: {err}") from err

    kwargs: dict = {"scenario": scenario}
    if command is not None:
        kwargs["command"] = command
    if l_max is not None:
        kwargs["l_max"] = l_max
    if detectors is not None:
        kwargs["detectors"] = detectors
    elif l_max is not None:
        kwargs["detectors"] = _default_detectors(l_max)
    for name, val in (
        ("pfa", pfa), ("trials", trials),
        ("calibration_trials", calibration_trials), ("output_path", out),
        ("workers", workers), ("scnr_grid_db", scnr_grid),
        ("cnr_grid_db", cnr_grid), ("rho_grid", rho_grid),
        ("cos_sq_phi_grid", cos_grid), ("cube_path", cube_path),
        ("cube_format", cube_format), ("cube_cut_bin", cube_cut),
        ("cube_eval_bin", cube_eval), ("cube_overlap", cube_overlap),
    ):
        if val is not None:
            kwargs[name] = val

    return ExperimentSpec(**kwargs)


def _fmt_value(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _fmt_list(xs) -> str:
    return " ".join(_fmt_value(x) for x in xs)


def serialize_spec(spec: ExperimentSpec) -> str:
    """Render a spec as config text; parse_config(serialize_spec(s)) == s."""
    scen = spec.scenario
    lines = [
        "[run]",
        f"command = {spec.command}",
        f"detectors = {_fmt_list(spec.detectors)}",
        f"pfa = {repr(spec.pfa)}",
        f"trials = {spec.trials}",
    ]
    if spec.calibration_trials is not None:
        lines.append(f"calibration_trials = {spec.calibration_trials}")
    lines += [
        f"l_max = {_fmt_list(spec.l_max)}",
        f"out = {spec.output_path}",
        f"workers = {spec.workers}",
        "",
        "[scenario]",
        f"n = {scen.n}",
        f"k = {scen.k}",
        f"rho = {repr(scen.rho)}",
        f"cnr_db = {repr(scen.cnr_db)}",
        f"noise_power = {repr(scen.noise_power)}",
        f"doppler = {repr(scen.doppler)}",
        f"scnr_db = {'none' if scen.scnr_db is None else repr(scen.scnr_db)}",
        f"cos_sq_phi = {repr(scen.cos_sq_phi)}",
        f"master_seed = {scen.master_seed}",
        "",
        "[grids]",
        f"scnr_db = {_fmt_list(spec.scnr_grid_db)}",
        f"cnr_db = {_fmt_list(spec.cnr_grid_db)}",
        f"rho = {_fmt_list(spec.rho_grid)}",
        f"cos_sq_phi = {_fmt_list(spec.cos_sq_phi_grid)}",
        "",
        "[cube]",
        f"format = {spec.cube_format}",
        f"overlap = {spec.cube_overlap}",
    ]
    if spec.cube_path is not None:
        lines.append(f"path = {spec.cube_path}")
    if spec.cube_cut_bin is not None:
        lines.append(f"cut_bin = {spec.cube_cut_bin}")
    if spec.cube_eval_bin is not None:
        lines.append(f"eval_bin = {spec.cube_eval_bin}")
    return "\n".join(lines) + "\n"

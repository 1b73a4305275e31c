"""Range-pulse data cubes: file formats, synthesis, sliding-window runs.

A cube holds complex baseband returns indexed (pulse, range bin). Two
fully specified encodings are supported: an interleaved little-endian
binary format for bulk data and a CSV format for inspection. Recorded (or
synthesized) cubes are evaluated with a sliding N-pulse window: the cell
under test is one designated range bin, the secondary data are the K/2
bins on each side, and consecutive windows may share a configurable number
of pulses.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import lfilter

from .curves import CurveResult
from .engine import statistics_from_stacks
from .harness import TrialEnsemble, calibrate_threshold, estimate_rate, order_labels
from .linalg import HermitianMatrix
from .scenario import (
    ScenarioConfig,
    _standard_complex,
    derive_stream_seed,
    steering_vector,
    trial_rng,
)

__all__ = [
    "FormatError",
    "InsufficientData",
    "DataCube",
    "CubeRunResult",
    "write_cube_binary",
    "read_cube_binary",
    "write_cube_csv",
    "read_cube_csv",
    "ingest_cube",
    "write_cube",
    "synthesize_cube",
    "window_count",
    "sliding_window_run",
]

_HEADER = struct.Struct("<QQ")

# substream namespace for cube synthesis, disjoint from the harness phases
_PHASE_CUBE = 5


class FormatError(ValueError):
    """Cube file violates the declared encoding."""


class InsufficientData(ValueError):
    """Cube too small for the requested windowing."""


@dataclass(frozen=True)
class DataCube:
    """Complex returns indexed (pulse, range bin), plus a source label."""

    data: np.ndarray
    source: str = ""

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.complex128)
        if data.ndim != 2:
            raise FormatError(f"cube must be 2-D (pulse, bin); got {data.ndim}-D")
        if not np.isfinite(data).all():
            raise FormatError("cube contains non-finite samples")
        object.__setattr__(self, "data", data)

    @property
    def pulse_count(self) -> int:
        return self.data.shape[0]

    @property
    def range_bin_count(self) -> int:
        return self.data.shape[1]


def write_cube_binary(cube: DataCube, path) -> None:
    """16-byte header (two LE u64 dims), then pulse-major LE f64 (re, im)."""
    p, r = cube.data.shape
    payload = np.empty((p, r, 2), dtype="<f8")
    payload[:, :, 0] = cube.data.real
    payload[:, :, 1] = cube.data.imag
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(p, r))
        fh.write(payload.tobytes())


def read_cube_binary(path) -> DataCube:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: truncated header ({len(raw)} bytes)")
    p, r = _HEADER.unpack_from(raw)
    expected = _HEADER.size + 16 * p * r
    if len(raw) != expected:
        raise FormatError(
            f"{path}: header declares {p}x{r} cube "
            f"({expected} bytes) but file holds {len(raw)}"
        )
    flat = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    pairs = flat.reshape(p, r, 2)
    data = pairs[:, :, 0] + 1j * pairs[:, :, 1]
    try:
        return DataCube(data=data, source=str(path))
    except FormatError as err:
        raise FormatError(f"{path}: {err}") from err


def write_cube_csv(cube: DataCube, path) -> None:
    """One row per pulse; 2R columns alternating re, im per range bin."""
    p, r = cube.data.shape
    with open(path, "w", encoding="ascii", newline="") as fh:
        for i in range(p):
            cells = []
            for j in range(r):
                cells.append(repr(float(cube.data[i, j].real)))
                cells.append(repr(float(cube.data[i, j].imag)))
            fh.write(",".join(cells) + "\n")


def read_cube_csv(path) -> DataCube:
    rows: list[list[float]] = []
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                values = [float(c) for c in line.split(",")]
            except ValueError as err:
                raise FormatError(f"{path}:{lineno}: {err}") from err
            if len(values) % 2 != 0:
                raise FormatError(
                    f"{path}:{lineno}: odd cell count {len(values)}; "
                    "cells must be re,im pairs"
                )
            if rows and len(values) != len(rows[0]):
                raise FormatError(
                    f"{path}:{lineno}: ragged row ({len(values)} cells, "
                    f"expected {len(rows[0])})"
                )
            rows.append(values)
    if not rows:
        raise FormatError(f"{path}: empty cube file")
    arr = np.asarray(rows)
    data = arr[:, 0::2] + 1j * arr[:, 1::2]
    try:
        return DataCube(data=data, source=str(path))
    except FormatError as err:
        raise FormatError(f"{path}: {err}") from err


def ingest_cube(path, format: str = "interleaved-binary") -> DataCube:
    if format == "interleaved-binary":
        return read_cube_binary(path)
    if format == "csv":
        return read_cube_csv(path)
    raise ValueError(f"unknown cube format {format!r}")


def write_cube(cube: DataCube, path, format: str = "interleaved-binary") -> None:
    if format == "interleaved-binary":
        write_cube_binary(cube, path)
    elif format == "csv":
        write_cube_csv(cube, path)
    else:
        raise ValueError(f"unknown cube format {format!r}")


def synthesize_cube(
    cfg: ScenarioConfig, pulses: int, range_bins: int
) -> DataCube:
    """A homogeneous cube drawn from the scenario's interference model.

    Per range bin, the clutter is an exact stationary AR(1) process with
    one-lag correlation rho (filtered from the stationary start), so every
    N-pulse window of every bin has exactly the scenario covariance
    build_covariance(cfg); white receiver noise is added on top. Bins are
    mutually independent.
    """
    if pulses < 1 or range_bins < 1:
        raise ValueError("cube dimensions must be positive")
    sigma_c = math.sqrt(cfg.noise_power * 10.0 ** (cfg.cnr_db / 10.0))
    rho = cfg.rho
    seed = derive_stream_seed(cfg.master_seed, _PHASE_CUBE)
    data = np.empty((pulses, range_bins), dtype=np.complex128)
    for j in range(range_bins):
        rng = trial_rng(seed, j)
        draws = _standard_complex(rng, pulses, 2)
        # x_0 = w_0 at full power, then x_t = rho x_{t-1} + sqrt(1-rho^2) w_t:
        # the exact stationary unit-power process with lag-h correlation rho^h
        drive = draws[:, 0].copy()
        drive[1:] *= math.sqrt(1.0 - rho**2)
        x = lfilter([1.0], [1.0, -rho], drive)
        data[:, j] = sigma_c * x + math.sqrt(cfg.noise_power) * draws[:, 1]
    return DataCube(data=data, source="synthetic")


def window_count(pulses: int, n: int, overlap: int) -> int:
    """Number of N-pulse windows when consecutive windows share overlap pulses."""
    if not 0 <= overlap < n:
        raise ValueError(f"overlap must lie in [0, N); got {overlap}")
    if pulses < n:
        return 0
    stride = n - overlap
    return (pulses - n) // stride + 1


@dataclass(frozen=True)
class CubeRunResult:
    """Thresholds from the calibration bin and rates from the evaluation bin."""

    curve: CurveResult
    thresholds: dict[str, float]
    window_count: int
    scnr_db: float | None


def _window_stacks(cube: DataCube, n: int, k: int, cut_bin: int, overlap: int):
    """(windows, n) CUT stack and (windows, n, k) secondary stack for one bin."""
    pulses, bins = cube.data.shape
    half = k // 2
    count = window_count(pulses, n, overlap)
    if count < 1:
        raise InsufficientData(
            f"cube has {pulses} pulses; at least {n} needed for one window"
        )
    if not half <= cut_bin < bins - half:
        raise InsufficientData(
            f"cut bin {cut_bin} needs {half} secondary bins on each side "
            f"of a {bins}-bin cube"
        )
    stride = n - overlap
    secondary_bins = list(range(cut_bin - half, cut_bin)) + list(
        range(cut_bin + 1, cut_bin + half + 1)
    )
    z = np.empty((count, n), dtype=np.complex128)
    zs = np.empty((count, n, k), dtype=np.complex128)
    for t in range(count):
        window = cube.data[t * stride : t * stride + n]
        z[t] = window[:, cut_bin]
        zs[t] = window[:, secondary_bins]
    return z, zs


def _region_covariance(zs: np.ndarray) -> HermitianMatrix:
    """Sample covariance of all secondary snapshots in the evaluation region."""
    flat = zs.transpose(0, 2, 1).reshape(-1, zs.shape[1])
    return HermitianMatrix(flat.T @ flat.conj() / flat.shape[0])


def sliding_window_run(cube: DataCube, spec) -> CubeRunResult:
    """Calibrate on one range bin of a cube and measure rates on another.

    Windows of N pulses slide with spec.cube_overlap shared pulses. The
    calibration bin (spec.cube_cut_bin) provides the null ensembles and
    thresholds at spec.pfa; the evaluation bin (spec.cube_eval_bin) yields
    the empirical rate per detector. When the scenario pins an SCNR, a
    target is injected into every evaluation window, normalized by the
    evaluation region's sample covariance (the true covariance of recorded
    data being unknown), so the measured rate is a detection probability;
    otherwise it is an empirical false-alarm probability.
    """
    cfg = spec.scenario
    n, k = cfg.n, cfg.k
    if k % 2 != 0:
        raise InsufficientData(f"windowing needs an even K; got {k}")
    labels = order_labels(
        lab for lab in spec.detectors if lab != "benchmark"
    )
    if not labels:
        raise ValueError("no adaptive detectors requested")
    overlap = spec.cube_overlap
    cut_bin = spec.cube_cut_bin
    eval_bin = spec.cube_eval_bin
    if cut_bin is None or eval_bin is None:
        raise InsufficientData("sliding-window run needs cut_bin and eval_bin")
    if cut_bin == eval_bin:
        raise InsufficientData("calibration and evaluation bins must differ")

    v = steering_vector(n, cfg.doppler)
    z_cal, zs_cal = _window_stacks(cube, n, k, cut_bin, overlap)
    z_ev, zs_ev = _window_stacks(cube, n, k, eval_bin, overlap)

    scnr_db = cfg.scnr_db
    if scnr_db is not None:
        m_hat = _region_covariance(zs_ev)
        # |alpha|^2 v^H M^-1 v = SCNR with the region estimate standing in for M
        alpha = math.sqrt(10.0 ** (scnr_db / 10.0) / m_hat.quad_form(v))
        z_ev = z_ev + alpha * v

    cal_stats, *_ = statistics_from_stacks(z_cal, zs_cal, v, labels)
    ev_stats, *_ = statistics_from_stacks(z_ev, zs_ev, v, labels)

    cal_scenario = replace(cfg, scnr_db=None)
    thresholds = {}
    rates = np.empty((1, len(labels)))
    cis = np.empty_like(rates)
    for j, lab in enumerate(labels):
        ens = TrialEnsemble(
            detector=lab, statistics=cal_stats[lab], scenario=cal_scenario
        )
        thresholds[lab] = calibrate_threshold(ens, spec.pfa)
        rates[0, j], cis[0, j] = estimate_rate(ev_stats[lab], thresholds[lab])

    count = z_ev.shape[0]
    curve = CurveResult(
        axis_names=("scnr_db",),
        axis_values=np.array(
            [[float("-inf") if scnr_db is None else scnr_db]]
        ),
        detectors=labels,
        rates=rates,
        cis=cis,
        trial_counts=np.array([count]),
    )
    return CubeRunResult(
        curve=curve,
        thresholds=thresholds,
        window_count=count,
        scnr_db=scnr_db,
    )

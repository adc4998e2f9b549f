"""Telemetry records, synthetic drive cycles, and file I/O.

The synthetic pipeline replaces the instrumented cell: a pseudo-random
drive-cycle current with periodic rest windows feeds the high-resolution
finite-difference oracle for ground truth; admittance samples are taken at
the end of each rest window and surface-temperature samples at every tick,
both with Gaussian noise.  The electrical side is a fixed-resistance
surrogate V = U_ocv - I*R0 (discharge positive), so the reconstructed heat
I*(U_ocv - V) equals I^2*R0 exactly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataError
from .fdmodel import fd_admittance, fd_simulate
from .impedance import AdmittancePoly
from .thermal import ThermalParams

__all__ = [
    "TelemetryRecord",
    "DriveCycleSpec",
    "generate_drive_cycle",
    "synthesize_telemetry",
    "load_telemetry",
    "save_telemetry",
    "save_trace",
    "save_sweep",
    "TELEMETRY_HEADER",
    "TRACE_HEADER",
]

TELEMETRY_HEADER = (
    "time_s",
    "current_a",
    "voltage_v",
    "t_inf_c",
    "adm_real_s",
    "t_surf_meas_c",
    "t_core_truth_c",
    "t_surf_truth_c",
)

TRACE_HEADER = (
    "time_s",
    "tbar_est",
    "gamma_est",
    "h_est",
    "tcore_est",
    "tsurf_est",
    "tcore_truth",
    "tsurf_truth",
    "innovation",
)

# Per-segment drive character: (current rms target in A, smoothing window s).
_PROFILE_SHAPES = {
    "urban": (12.0, 3),
    "mixed": (14.0, 5),
    "motorway": (16.0, 9),
}

_DEFAULT_SEGMENTS = (
    (700.0, "urban"),
    (1050.0, "mixed"),
    (1050.0, "motorway"),
    (700.0, "mixed"),
)


@dataclass(frozen=True)
class TelemetryRecord:
    """One telemetry sample; absent optional channels stay None."""

    time: float
    current: float
    voltage: float
    t_inf: float
    adm_real: float | None = None
    t_surf_meas: float | None = None
    t_core_truth: float | None = None
    t_surf_truth: float | None = None

    def __post_init__(self):
        if self.time < 0.0 or not math.isfinite(self.time):
            raise DataError(f"record time must be non-negative, got {self.time!r}")


@dataclass(frozen=True)
class DriveCycleSpec:
    """Shape of a synthetic excitation profile.

    ``segments`` are (duration s, profile id) pairs looped ``loop_count``
    times and truncated/padded to ``total_s``.  Excitation runs for
    ``excitation_s`` and rests (zero current) for ``rest_s``, repeating; the
    rest cadence must divide the impedance measurement cadence.
    """

    segments: tuple = _DEFAULT_SEGMENTS
    loop_count: int = 1
    excitation_s: float = 20.0
    rest_s: float = 4.0
    total_s: float = 3500.0
    current_bounds: tuple = (-23.0, 30.0)

    def __post_init__(self):
        if self.excitation_s <= 0 or self.rest_s < 0 or self.total_s <= 0:
            raise ConfigError("cycle durations must be positive")
        if self.loop_count < 1:
            raise ConfigError("loop_count must be at least 1")
        lo, hi = self.current_bounds
        if not lo < 0 < hi:
            raise ConfigError("current bounds must bracket zero")
        segments = tuple((float(d), str(p)) for d, p in self.segments)
        for duration, profile in segments:
            if duration <= 0:
                raise ConfigError("segment durations must be positive")
            if profile not in _PROFILE_SHAPES:
                raise ConfigError(f"unknown current profile {profile!r}")
        object.__setattr__(self, "segments", segments)

    @property
    def block_s(self) -> float:
        return self.excitation_s + self.rest_s


def _smooth(x: np.ndarray, window: int) -> np.ndarray:
    if window <= 1:
        return x
    kernel = np.ones(window) / window
    return np.convolve(x, kernel, mode="same")


def generate_drive_cycle(spec: DriveCycleSpec, seed: int = 0) -> np.ndarray:
    """Band-limited pseudo-random current series at 1 Hz (t = 0..total_s).

    Looped segment profiles set the local rms and smoothness; rest windows
    carry exactly 0 A; everything stays inside the current bounds.  The same
    seed always yields the same series.
    """
    rng = np.random.default_rng(seed)
    n = int(round(spec.total_s)) + 1
    current = np.empty(n)
    plan = [seg for _ in range(spec.loop_count) for seg in spec.segments]
    pos = 0
    while pos < n:
        for duration, profile in plan:
            if pos >= n:
                break
            m = min(int(round(duration)), n - pos)
            rms, window = _PROFILE_SHAPES[profile]
            raw = _smooth(rng.standard_normal(m + 2 * window), window)[window:window + m]
            scale = rms / max(np.sqrt(np.mean(raw**2)), 1e-12)
            current[pos:pos + m] = raw * scale
            pos += m
    lo, hi = spec.current_bounds
    np.clip(current, lo, hi, out=current)
    block = spec.block_s
    times = np.arange(n, dtype=float)
    in_rest = (times % block) >= spec.excitation_s
    current[in_rest] = 0.0
    return current


def synthesize_telemetry(
    current: np.ndarray,
    params: ThermalParams,
    poly: AdmittancePoly,
    noise=(1e-4, 0.05),
    seed: int = 0,
    r0_ohm: float = 0.01,
    u_ocv: float = 3.3,
    t_inf=8.0,
    cadence_s: float = 24.0,
    rest_s: float = 4.0,
    excitation_s: float = 20.0,
    fd_nodes: int = 201,
    fd_dt: float = 0.1,
):
    """Oracle-generated telemetry for a 1 Hz current series.

    Returns a list of TelemetryRecord.  Admittance samples (with std
    noise[0]) are attached at the end of each rest window, i.e. at integer
    multiples of ``cadence_s``; noisy surface temperature (std noise[1]) and
    the noiseless truth channels are attached at every record.
    """
    current = np.asarray(current, dtype=float)
    if current.ndim != 1 or len(current) < 2:
        raise ConfigError("current series must be 1D with at least 2 samples")
    if cadence_s % (excitation_s + rest_s) > 1e-9:
        raise ConfigError("measurement cadence must be a multiple of the rest blocks")
    per_tick = int(round(1.0 / fd_dt))
    if abs(per_tick * fd_dt - 1.0) > 1e-9:
        raise ConfigError("fd_dt must divide 1 s")
    n_records = len(current)
    n_steps = (n_records - 1) * per_tick

    t_inf_ticks = np.full(n_records, t_inf, dtype=float) if np.isscalar(t_inf) else np.asarray(t_inf, dtype=float)
    if t_inf_ticks.shape != (n_records,):
        raise ConfigError("t_inf must be a scalar or match the current series")

    # zero-order-hold upsample of the 1 Hz inputs onto the oracle grid
    q_ticks = current**2 * r0_ohm
    q_fd = np.repeat(q_ticks[:-1], per_tick)
    t_inf_fd = np.repeat(t_inf_ticks[:-1], per_tick)

    cadence = int(round(cadence_s))
    meas_ticks = np.arange(cadence, n_records, cadence, dtype=int)
    record_steps = meas_ticks * per_tick
    sol = fd_simulate(
        params, q_fd, t_inf_fd, n_nodes=fd_nodes, dt=fd_dt,
        init=np.full(fd_nodes, t_inf_ticks[0]), record_steps=record_steps,
    )

    sigma_adm, sigma_temp = noise
    rng = np.random.default_rng(seed)
    adm_noise = rng.normal(0.0, 1.0, size=len(meas_ticks))
    surf_noise = rng.normal(0.0, 1.0, size=n_records)

    adm_by_tick = {}
    for i, tick in enumerate(meas_ticks):
        adm_by_tick[int(tick)] = fd_admittance(sol.fields[i], poly) + sigma_adm * adm_noise[i]

    tick_steps = np.arange(n_records) * per_tick
    core_truth = sol.core[tick_steps]
    surf_truth = sol.surf[tick_steps]

    records = []
    for k in range(n_records):
        voltage = u_ocv - current[k] * r0_ohm
        records.append(
            TelemetryRecord(
                time=float(k),
                current=float(current[k]),
                voltage=float(voltage),
                t_inf=float(t_inf_ticks[k]),
                adm_real=adm_by_tick.get(k),
                t_surf_meas=float(surf_truth[k] + sigma_temp * surf_noise[k]),
                t_core_truth=float(core_truth[k]),
                t_surf_truth=float(surf_truth[k]),
            )
        )
    return records


def _fmt(value) -> str:
    return "" if value is None else format(value, ".12g")


def _parse_optional(text: str, lineno: int, name: str):
    text = text.strip()
    if not text:
        return None
    try:
        return float(text)
    except ValueError as exc:
        raise DataError(f"line {lineno}: bad {name}: {text!r}") from exc


def save_telemetry(records, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TELEMETRY_HEADER)
        for rec in records:
            writer.writerow(
                [
                    _fmt(rec.time),
                    _fmt(rec.current),
                    _fmt(rec.voltage),
                    _fmt(rec.t_inf),
                    _fmt(rec.adm_real),
                    _fmt(rec.t_surf_meas),
                    _fmt(rec.t_core_truth),
                    _fmt(rec.t_surf_truth),
                ]
            )


def load_telemetry(path):
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != TELEMETRY_HEADER:
            raise DataError(f"telemetry CSV must start with header {','.join(TELEMETRY_HEADER)}")
        last_time = -math.inf
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(TELEMETRY_HEADER):
                raise DataError(
                    f"line {lineno}: expected {len(TELEMETRY_HEADER)} fields, got {len(row)}"
                )
            try:
                time = float(row[0])
                current = float(row[1])
                voltage = float(row[2])
                t_inf = float(row[3])
            except ValueError as exc:
                raise DataError(f"line {lineno}: {exc}") from exc
            if time <= last_time:
                raise DataError(f"line {lineno}: time not strictly increasing")
            last_time = time
            records.append(
                TelemetryRecord(
                    time=time,
                    current=current,
                    voltage=voltage,
                    t_inf=t_inf,
                    adm_real=_parse_optional(row[4], lineno, "adm_real_s"),
                    t_surf_meas=_parse_optional(row[5], lineno, "t_surf_meas_c"),
                    t_core_truth=_parse_optional(row[6], lineno, "t_core_truth_c"),
                    t_surf_truth=_parse_optional(row[7], lineno, "t_surf_truth_c"),
                )
            )
    if not records:
        raise DataError("telemetry CSV contains no records")
    return records


def save_trace(trace, records, path) -> None:
    """Write an estimator trace with the truth channels merged alongside."""
    if len(records) != len(trace):
        raise DataError("trace and telemetry lengths differ")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRACE_HEADER)
        for i, rec in enumerate(records):
            innovation = trace.innovation[i]
            writer.writerow(
                [
                    _fmt(trace.time[i]),
                    _fmt(trace.tbar[i]),
                    _fmt(trace.gamma[i]),
                    _fmt(trace.h[i]),
                    _fmt(trace.tcore[i]),
                    _fmt(trace.tsurf[i]),
                    _fmt(rec.t_core_truth),
                    _fmt(rec.t_surf_truth),
                    _fmt(None if math.isnan(innovation) else innovation),
                ]
            )


def save_sweep(freqs, responses: dict, path) -> None:
    """Write a frequency sweep: f_hz plus re/im of every H entry per model."""
    entries = ("h11", "h12", "h21", "h22")
    models = list(responses)
    header = ["f_hz"]
    for model in models:
        for entry in entries:
            header.append(f"{model}_{entry}_re")
            header.append(f"{model}_{entry}_im")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i, f in enumerate(freqs):
            row = [_fmt(float(f))]
            for model in models:
                h = responses[model][i]
                for r, c in ((0, 0), (0, 1), (1, 0), (1, 1)):
                    row.append(_fmt(float(np.real(h[r, c]))))
                    row.append(_fmt(float(np.imag(h[r, c]))))
            writer.writerow(row)

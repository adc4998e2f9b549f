"""Admittance-temperature calibration and the nonlinear measurement map.

The real admittance at a fixed frequency is a quadratic polynomial of a
uniform cell temperature.  For a nonuniform (quartic-profile) field it
becomes a closed-form function of the model state and the surface
temperature; composing the convective surface relation turns it into the
filter's measurement y = f(t_bar, gamma_bar, t_inf; h).

Everything here works in real admittance (1/Ohm).
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np

from .errors import CalibrationError, DataError
from .thermal import ThermalParams, ThermalState, _surface_coeffs

__all__ = [
    "AdmittancePoly",
    "ExtrapolationWarning",
    "fit_admittance_poly",
    "admittance_uniform",
    "admittance_from_state",
    "measurement_fn",
    "measurement_jacobian_state",
    "measurement_jacobian_h",
    "eis_volume_avg_temp",
    "arrhenius_admittance",
    "default_calibration",
    "save_admittance_poly",
    "load_admittance_poly",
    "read_calibration_csv",
    "CALIBRATION_CSV_HEADER",
]

CALIBRATION_CSV_HEADER = ("temp_c", "adm_real")

# Shipped synthetic calibration: quadratic fit to an Arrhenius-shaped
# admittance curve at 215 Hz over the 5..45 degC equilibrium range.  The
# curvature (through the activation temperature) is what lets the filter see
# temperature nonuniformity in the admittance signal.
DEFAULT_CAL_FREQ_HZ = 215.0
DEFAULT_CAL_RANGE = (5.0, 45.0)
DEFAULT_CAL_E_OVER_K = 1800.0  # activation temperature, K
DEFAULT_CAL_Y25 = 60.0  # admittance at 25 degC, 1/Ohm (~17 mOhm cell)


class ExtrapolationWarning(UserWarning):
    """Temperature outside the calibrated range; the fit is extrapolating."""


@dataclass(frozen=True)
class AdmittancePoly:
    """Quadratic admittance calibration Y(T) = a1 + a2 T + a3 T^2.

    a1 in 1/Ohm, a2 in 1/(Ohm degC), a3 in 1/(Ohm degC^2); valid over
    [t_min, t_max] where the polynomial must be strictly monotone.
    """

    a1: float
    a2: float
    a3: float
    freq_hz: float
    t_min: float
    t_max: float

    def __post_init__(self):
        if not (self.freq_hz > 0.0 and math.isfinite(self.freq_hz)):
            raise CalibrationError(f"freq_hz must be positive, got {self.freq_hz!r}")
        if not self.t_min < self.t_max:
            raise CalibrationError("t_min must be below t_max")
        d_lo = self.derivative(self.t_min)
        d_hi = self.derivative(self.t_max)
        if d_lo == 0.0 or d_hi == 0.0 or (d_lo > 0.0) != (d_hi > 0.0):
            raise CalibrationError(
                "calibration is not strictly monotone over its valid range"
            )

    def evaluate(self, t: float) -> float:
        return self.a1 + t * (self.a2 + self.a3 * t)

    def derivative(self, t: float) -> float:
        return self.a2 + 2.0 * self.a3 * t

    def in_range(self, t: float) -> bool:
        return self.t_min <= t <= self.t_max


def fit_admittance_poly(samples, freq_hz: float):
    """Least-squares quadratic fit of (temperature, admittance) samples.

    Returns (AdmittancePoly, residual_rms).  Fewer than three distinct
    temperatures is insufficient data; a non-monotone fit over the sampled
    range is a calibration error.
    """
    samples = [(float(t), float(y)) for t, y in samples]
    temps = np.array([t for t, _ in samples])
    adm = np.array([y for _, y in samples])
    if len(np.unique(temps)) < 3:
        raise DataError("need at least 3 samples with distinct temperatures")
    coeffs = np.polynomial.polynomial.polyfit(temps, adm, 2)
    residual = adm - np.polynomial.polynomial.polyval(temps, coeffs)
    rms = float(np.sqrt(np.mean(residual**2)))
    poly = AdmittancePoly(
        a1=float(coeffs[0]),
        a2=float(coeffs[1]),
        a3=float(coeffs[2]),
        freq_hz=float(freq_hz),
        t_min=float(temps.min()),
        t_max=float(temps.max()),
    )
    return poly, rms


def admittance_uniform(poly: AdmittancePoly, t: float) -> float:
    """Admittance of a uniformly warm cell; warns outside the fitted range."""
    if not poly.in_range(t):
        warnings.warn(
            f"temperature {t:.2f} degC outside calibrated range "
            f"[{poly.t_min:g}, {poly.t_max:g}]",
            ExtrapolationWarning,
            stacklevel=2,
        )
    return poly.evaluate(t)


def admittance_from_state(
    poly: AdmittancePoly, state: ThermalState, t_surf: float, params: ThermalParams
) -> float:
    """Closed-form admittance of the quartic profile (t_bar, gamma_bar, t_surf).

    Equals the radial admittance integral over the reconstructed profile; for
    a uniform state (t_surf = t_bar, gamma_bar = 0) it collapses to the plain
    quadratic a1 + a2 t_bar + a3 t_bar^2.
    """
    a1, a2, a3 = poly.a1, poly.a2, poly.a3
    tb, gam = state.t_bar, state.gamma_bar
    r_o = params.r_o
    return (
        a1
        + a2 * tb
        + a3
        * (
            3.0 * tb * tb
            + 2.0 * t_surf * t_surf
            - 4.0 * tb * t_surf
            + 15.0 * r_o**2 * gam * gam / 32.0
            + 15.0 * r_o * tb * gam / 8.0
            - 15.0 * r_o * t_surf * gam / 8.0
        )
    )


def _d_adm_d_tsurf(poly: AdmittancePoly, state: ThermalState, t_surf: float, r_o: float) -> float:
    return poly.a3 * (
        4.0 * (t_surf - state.t_bar) - 15.0 * r_o * state.gamma_bar / 8.0
    )


def measurement_fn(
    poly: AdmittancePoly,
    state: ThermalState,
    h: float,
    t_inf: float,
    params: ThermalParams,
) -> float:
    """Predicted admittance y = f(t_bar, gamma_bar, t_inf; h).

    The surface temperature is eliminated through the convective boundary
    relation at the given h (which may differ from params.h while the filter
    is estimating it).
    """
    k_tbar, k_gamma, k_tinf = _surface_coeffs(params, h)
    t_surf = k_tbar * state.t_bar + k_gamma * state.gamma_bar + k_tinf * t_inf
    return admittance_from_state(poly, state, t_surf, params)


def measurement_jacobian_state(
    poly: AdmittancePoly,
    state: ThermalState,
    h: float,
    t_inf: float,
    params: ThermalParams,
):
    """(df/dt_bar, df/dgamma_bar) of the measurement map, closed form."""
    a2, a3 = poly.a2, poly.a3
    r_o = params.r_o
    tb, gam = state.t_bar, state.gamma_bar
    k_tbar, k_gamma, k_tinf = _surface_coeffs(params, h)
    t_surf = k_tbar * tb + k_gamma * gam + k_tinf * t_inf
    d_ts = _d_adm_d_tsurf(poly, state, t_surf, r_o)
    df_dtb = a2 + a3 * (6.0 * tb - 4.0 * t_surf + 15.0 * r_o * gam / 8.0) + d_ts * k_tbar
    df_dgam = (
        a3 * (15.0 * r_o**2 * gam / 16.0 + 15.0 * r_o * (tb - t_surf) / 8.0)
        + d_ts * k_gamma
    )
    return df_dtb, df_dgam


def measurement_jacobian_h(
    poly: AdmittancePoly,
    state: ThermalState,
    h: float,
    t_inf: float,
    params: ThermalParams,
) -> float:
    """df/dh of the measurement map: the h-dependence enters via T_surf."""
    kt, r_o = params.kt, params.r_o
    tb, gam = state.t_bar, state.gamma_bar
    k_tbar, k_gamma, k_tinf = _surface_coeffs(params, h)
    t_surf = k_tbar * tb + k_gamma * gam + k_tinf * t_inf
    den = 24.0 * kt + r_o * h
    d_tsurf_dh = r_o * kt * (24.0 * (t_inf - tb) - 7.5 * r_o * gam) / den**2
    return _d_adm_d_tsurf(poly, state, t_surf, r_o) * d_tsurf_dh


def eis_volume_avg_temp(poly: AdmittancePoly, y: float) -> float:
    """Uniform temperature that would produce the measured admittance.

    This is close to, but not identical to, the volume-average temperature of
    a nonuniform cell.  The admittance must lie within the image of the valid
    range; the root inside the range is unique by monotonicity.
    """
    lo, hi = sorted((poly.evaluate(poly.t_min), poly.evaluate(poly.t_max)))
    tol = 1e-12 * max(abs(lo), abs(hi), 1.0)
    if not (lo - tol <= y <= hi + tol):
        raise CalibrationError(
            f"admittance {y!r} outside the calibrated image [{lo:g}, {hi:g}]"
        )
    if poly.a3 == 0.0:
        return (y - poly.a1) / poly.a2
    # stable quadratic roots of a3 t^2 + a2 t + (a1 - y) = 0
    disc = poly.a2**2 - 4.0 * poly.a3 * (poly.a1 - y)
    disc = max(disc, 0.0)
    q = -0.5 * (poly.a2 + math.copysign(math.sqrt(disc), poly.a2))
    roots = []
    if q != 0.0:
        roots.append(q / poly.a3)
        roots.append((poly.a1 - y) / q)
    else:
        roots.append(0.0)
    slack = 1e-9 * (poly.t_max - poly.t_min)
    in_range = [t for t in roots if poly.t_min - slack <= t <= poly.t_max + slack]
    if len(set(np.round(in_range, 12))) > 1:
        raise AssertionError("both quadratic roots inside the monotone range")
    if not in_range:
        # numerically just outside after rounding; clamp via the nearest root
        in_range = [min(roots, key=lambda t: abs(t - 0.5 * (poly.t_min + poly.t_max)))]
    return float(in_range[0])


def arrhenius_admittance(t_c, scale: float, e_over_k: float):
    """Arrhenius-shaped admittance scale * exp(-E/(T + 273.15)), vectorized."""
    t_c = np.asarray(t_c, dtype=float)
    out = scale * np.exp(-e_over_k / (t_c + 273.15))
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=1)
def default_calibration() -> AdmittancePoly:
    """The calibration shipped with the package (synthetic, self-consistent).

    A quadratic fit to an Arrhenius curve over 5..45 degC; the paper-style
    coefficients themselves are configuration, not published values.
    """
    t_lo, t_hi = DEFAULT_CAL_RANGE
    temps = np.linspace(t_lo, t_hi, 401)
    c = DEFAULT_CAL_Y25 / math.exp(-DEFAULT_CAL_E_OVER_K / (25.0 + 273.15))
    adm = arrhenius_admittance(temps, c, DEFAULT_CAL_E_OVER_K)
    poly, _ = fit_admittance_poly(zip(temps, adm), DEFAULT_CAL_FREQ_HZ)
    return poly


def save_admittance_poly(poly: AdmittancePoly, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(asdict(poly), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_admittance_poly(path) -> AdmittancePoly:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    try:
        return AdmittancePoly(**{k: float(raw[k]) for k in
                                 ("a1", "a2", "a3", "freq_hz", "t_min", "t_max")})
    except KeyError as exc:
        raise DataError(f"calibration JSON missing key {exc}") from exc


def read_calibration_csv(path):
    """Read (temp_c, adm_real) samples from a calibration CSV."""
    import csv

    samples = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(s.strip() for s in header) != CALIBRATION_CSV_HEADER:
            raise DataError(
                f"calibration CSV must start with header {','.join(CALIBRATION_CSV_HEADER)}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise DataError(f"line {lineno}: expected 2 fields, got {len(row)}")
            try:
                samples.append((float(row[0]), float(row[1])))
            except ValueError as exc:
                raise DataError(f"line {lineno}: {exc}") from exc
    return samples

"""State and joint state-parameter estimation of the cell temperature field.

One recursion covers all four estimator variants:

* measurement `admittance` + dual=False  -> EKF (nonlinear admittance output)
* measurement `admittance` + dual=True   -> DEKF (also estimates h)
* measurement `surface_temp` + dual=False -> KF  (linear surface output)
* measurement `surface_temp` + dual=True  -> DKF

Time updates run at every telemetry tick; measurement updates are event
driven (only at records that carry the measurement).  The state update runs
first and uses the a-priori h.

The parameter filter follows the dual-EKF formulation: its innovation is
the shared measurement innovation, and its measurement sensitivity is the
recurrent total derivative of the predicted measurement with respect to h
(the direct surface-path term plus the sensitivity of the propagated state
to h, accumulated through the model recursion).  Without the recurrent
term the parameter branch is blind: the state update absorbs essentially
the whole innovation, so nothing attributable to h survives in the
residual.  A chi-square gate skips parameter updates while the innovation
is dominated by gross state transients (e.g. a deliberately wrong x0),
whose leakage through the measurement curvature would otherwise kick the
parameter estimate by orders of magnitude.

Covariance updates are in Joseph form and re-symmetrized each step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .errors import ConfigError, DataError, NumericalError
from .impedance import (
    AdmittancePoly,
    measurement_fn,
    measurement_jacobian_h,
    measurement_jacobian_state,
)
from .thermal import (
    HeatInput,
    StateSpaceModel,
    ThermalParams,
    ThermalState,
    _surface_coeffs,
    build_continuous,
    discretize,
    heat_generation,
)

__all__ = [
    "EstimatorConfig",
    "EstimatorState",
    "EstimateTrace",
    "time_update",
    "measurement_update",
    "run_estimator",
    "rmse",
    "H_MIN",
]

# Floor for the estimated convection coefficient: a non-positive h makes the
# model matrices ill-posed and can destabilize the discrete dynamics.
H_MIN = 0.1

# Parameter updates are skipped when the squared innovation exceeds
# GATE_SIGMA^2 times its predicted variance (state transients, not h).
GATE_SIGMA = 5.0

# Relative step for the dA/dh, dB/dh central differences.
_H_STEP_REL = 1e-6

MEASUREMENT_KINDS = ("admittance", "surface_temp")


@dataclass(frozen=True)
class EstimatorConfig:
    """Tuning and initialization of one estimator run.

    sigma_n is the measurement noise std in measurement units (1/Ohm for
    admittance, degC for surface temperature); beta_v scales the state
    process noise R_v = beta_v^2 diag(2, 2); beta_e is the parameter
    random-walk scale (used only when dual).  beta_e = 0 with p0_h = 0 makes
    the parameter filter inert, which reduces the DEKF to the EKF exactly.
    """

    sigma_n: float = 1e-4
    beta_v: float = 0.1
    beta_e: float = 2.5
    dt: float = 1.0
    x0: ThermalState = field(default_factory=lambda: ThermalState(25.0, 0.0))
    p0_x: np.ndarray = field(default_factory=lambda: np.diag([25.0, 1.0]))
    h0: float | None = None
    p0_h: float = 25.0
    measurement_kind: str = "admittance"
    dual: bool = False

    def __post_init__(self):
        if self.measurement_kind not in MEASUREMENT_KINDS:
            raise ConfigError(f"unknown measurement kind {self.measurement_kind!r}")
        for name in ("sigma_n", "beta_v", "dt"):
            if not getattr(self, name) > 0.0:
                raise ConfigError(f"{name} must be positive")
        if self.beta_e < 0.0 or self.p0_h < 0.0:
            raise ConfigError("beta_e and p0_h must be non-negative")
        if self.h0 is not None and not self.h0 > 0.0:
            raise ConfigError("h0 must be positive when given")
        p = np.asarray(self.p0_x, dtype=float)
        if p.shape != (2, 2) or not np.allclose(p, p.T):
            raise ConfigError("p0_x must be a symmetric 2x2 matrix")
        if np.any(np.linalg.eigvalsh(p) <= 0.0):
            raise ConfigError("p0_x must be positive definite")
        p = p.copy()
        p.flags.writeable = False
        object.__setattr__(self, "p0_x", p)

    @property
    def r_v(self) -> np.ndarray:
        return self.beta_v**2 * np.diag([2.0, 2.0])

    @property
    def r_n(self) -> float:
        return self.sigma_n**2

    @property
    def r_e(self) -> float:
        return self.beta_e**2


@dataclass(frozen=True)
class EstimatorState:
    """Filter state after a time or measurement update."""

    x_hat: ThermalState
    p_x: np.ndarray
    h_hat: float
    p_h: float
    k: int = 0

    def __post_init__(self):
        p = 0.5 * (np.asarray(self.p_x, dtype=float) + np.asarray(self.p_x, dtype=float).T)
        p.flags.writeable = False
        object.__setattr__(self, "p_x", p)


@dataclass(frozen=True)
class EstimateTrace:
    """Per-step history of an estimator run (derived outputs recomputed)."""

    time: np.ndarray
    tbar: np.ndarray
    gamma: np.ndarray
    h: np.ndarray
    tcore: np.ndarray
    tsurf: np.ndarray
    innovation: np.ndarray  # NaN at steps without a measurement
    p_tbar: np.ndarray
    p_gamma: np.ndarray
    p_h: np.ndarray

    def __len__(self):
        return len(self.time)


@lru_cache(maxsize=1024)
def _discrete_model(params: ThermalParams, h: float, dt: float) -> StateSpaceModel:
    """ZOH model rebuilt at the estimated h (cached; h changes rarely)."""
    return discretize(build_continuous(replace(params, h=h, v_b=0.0)), dt)


def _floor_h(h: float) -> float:
    return h if h > H_MIN else H_MIN


def initial_state(cfg: EstimatorConfig, params: ThermalParams) -> EstimatorState:
    h0 = params.h if cfg.h0 is None else cfg.h0
    return EstimatorState(
        x_hat=cfg.x0, p_x=cfg.p0_x, h_hat=_floor_h(h0), p_h=cfg.p0_h, k=0
    )


def time_update(
    est: EstimatorState,
    inp: HeatInput,
    cfg: EstimatorConfig,
    params: ThermalParams,
) -> EstimatorState:
    """A-priori propagation of parameter and state over one dt."""
    p_h = est.p_h + cfg.r_e if cfg.dual else est.p_h
    model = _discrete_model(params, est.h_hat, cfg.dt)
    x = model.a @ est.x_hat.as_array() + model.b @ inp.as_array()
    p_x = model.a @ est.p_x @ model.a.T + cfg.r_v
    return EstimatorState(
        x_hat=ThermalState(float(x[0]), float(x[1])),
        p_x=p_x,
        h_hat=est.h_hat,
        p_h=p_h,
        k=est.k + 1,
    )


def _predict_measurement(kind, state, h, t_inf, params, poly):
    """Measurement prediction and its state Jacobian row (1x2)."""
    if kind == "admittance":
        y = measurement_fn(poly, state, h, t_inf, params)
        jac = np.array(measurement_jacobian_state(poly, state, h, t_inf, params))
    else:
        k_tbar, k_gamma, k_tinf = _surface_coeffs(params, h)
        y = k_tbar * state.t_bar + k_gamma * state.gamma_bar + k_tinf * t_inf
        jac = np.array([k_tbar, k_gamma])
    return y, jac


def _jacobian_h(kind, state, h, t_inf, params, poly):
    if kind == "admittance":
        return measurement_jacobian_h(poly, state, h, t_inf, params)
    den = 24.0 * params.kt + params.r_o * h
    return (
        params.r_o
        * params.kt
        * (24.0 * (t_inf - state.t_bar) - 7.5 * params.r_o * state.gamma_bar)
        / den**2
    )


def measurement_update(
    est: EstimatorState,
    y: float,
    t_inf: float,
    cfg: EstimatorConfig,
    params: ThermalParams,
    poly: AdmittancePoly | None = None,
):
    """State update at the a-priori h, then (if dual) the parameter update.

    Returns (EstimatorState, innovation).  The parameter innovation is
    re-evaluated at the already-updated state per the dual-filter ordering.
    """
    if cfg.measurement_kind == "admittance" and poly is None:
        raise ConfigError("admittance measurement requires a calibration poly")
    h_minus = est.h_hat
    y_pred, jac = _predict_measurement(
        cfg.measurement_kind, est.x_hat, h_minus, t_inf, params, poly
    )
    p_minus = est.p_x
    s = float(jac @ p_minus @ jac) + cfg.r_n
    if not (s > 0.0) or not math.isfinite(s):
        raise NumericalError(
            f"innovation covariance not positive at step {est.k}: S={s!r}, "
            f"P=diag({p_minus[0, 0]:.3g},{p_minus[1, 1]:.3g}), H={jac!r}"
        )
    gain = (p_minus @ jac) / s
    innovation = y - y_pred
    x = est.x_hat.as_array() + gain * innovation
    i_kh = np.eye(2) - np.outer(gain, jac)
    p_x = i_kh @ p_minus @ i_kh.T + cfg.r_n * np.outer(gain, gain)
    x_new = ThermalState(float(x[0]), float(x[1]))

    h_new, p_h = est.h_hat, est.p_h
    if cfg.dual:
        jac_h = _jacobian_h(cfg.measurement_kind, x_new, h_minus, t_inf, params, poly)
        s_h = jac_h * est.p_h * jac_h + cfg.r_n
        if not (s_h > 0.0) or not math.isfinite(s_h):
            raise NumericalError(f"parameter innovation covariance not positive: {s_h!r}")
        gain_h = est.p_h * jac_h / s_h
        y_pred_post, _ = _predict_measurement(
            cfg.measurement_kind, x_new, h_minus, t_inf, params, poly
        )
        h_new = _floor_h(h_minus + gain_h * (y - y_pred_post))
        one_m = 1.0 - gain_h * jac_h
        p_h = one_m * est.p_h * one_m + gain_h * cfg.r_n * gain_h

    return (
        EstimatorState(x_hat=x_new, p_x=p_x, h_hat=h_new, p_h=p_h, k=est.k),
        float(innovation),
    )


def run_estimator(
    records,
    cfg: EstimatorConfig,
    params: ThermalParams,
    poly: AdmittancePoly | None = None,
    u_ocv: float = 3.3,
) -> EstimateTrace:
    """Run the filter over a telemetry sequence and collect the trace.

    Heat is reconstructed from current/voltage per record.  A record
    contributes a measurement update only when it carries the configured
    measurement channel; otherwise the filter just predicts.
    """
    records = list(records)
    if not records:
        raise DataError("telemetry is empty")
    times = np.array([r.time for r in records])
    if np.any(np.diff(times) <= 0.0):
        raise DataError("telemetry time must be strictly increasing")
    if np.any(np.abs(np.diff(times) - cfg.dt) > 1e-6 * max(cfg.dt, 1.0)):
        raise DataError("telemetry spacing does not match the configured dt")

    est = initial_state(cfg, params)
    n = len(records)
    out = {
        name: np.empty(n)
        for name in ("tbar", "gamma", "h", "tcore", "tsurf", "innovation",
                     "p_tbar", "p_gamma", "p_h")
    }
    out["innovation"].fill(np.nan)

    for k, rec in enumerate(records):
        q = heat_generation(rec.current, rec.voltage, u_ocv)
        inp = HeatInput(q, rec.t_inf)
        if k > 0:
            prev = records[k - 1]
            inp_prev = HeatInput(
                heat_generation(prev.current, prev.voltage, u_ocv), prev.t_inf
            )
            est = time_update(est, inp_prev, cfg, params)
        y = rec.adm_real if cfg.measurement_kind == "admittance" else rec.t_surf_meas
        if y is not None:
            est, innovation = measurement_update(est, y, rec.t_inf, cfg, params, poly)
            out["innovation"][k] = innovation

        model = _discrete_model(params, est.h_hat, cfg.dt)
        yy = model.c @ est.x_hat.as_array() + model.d @ inp.as_array()
        out["tbar"][k] = est.x_hat.t_bar
        out["gamma"][k] = est.x_hat.gamma_bar
        out["h"][k] = est.h_hat
        out["tcore"][k] = yy[0]
        out["tsurf"][k] = yy[1]
        out["p_tbar"][k] = est.p_x[0, 0]
        out["p_gamma"][k] = est.p_x[1, 1]
        out["p_h"][k] = est.p_h

    return EstimateTrace(time=times, **{k: v for k, v in out.items()})


def rmse(trace: EstimateTrace, truth, channel: str, window=None) -> float:
    """Root-mean-square error of a trace channel against an aligned truth.

    ``truth`` must be sampled at the trace times.  ``window`` is an inclusive
    (t_start, t_end) interval; an empty selection is an error.
    """
    if channel == "core":
        est = trace.tcore
    elif channel == "surface":
        est = trace.tsurf
    else:
        raise ValueError(f"channel must be 'core' or 'surface', got {channel!r}")
    truth = np.asarray(truth, dtype=float)
    if truth.shape != trace.time.shape:
        raise DataError("truth series must align with the trace")
    mask = np.isfinite(truth)
    if window is not None:
        t0, t1 = window
        mask &= (trace.time >= t0) & (trace.time <= t1)
    if not np.any(mask):
        raise DataError("rmse window selects no samples")
    diff = est[mask] - truth[mask]
    return float(np.sqrt(np.mean(diff**2)))

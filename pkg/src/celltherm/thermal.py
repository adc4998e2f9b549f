"""Two-state reduced-order thermal model of a cylindrical cell.

The radial temperature profile is approximated by a quartic polynomial in r.
The two model states are the volume-averaged temperature ``t_bar`` (degC) and
the volume-averaged radial temperature gradient ``gamma_bar`` (degC/m).
Inputs are the total heat generation Q (W) and the coolant temperature
T_inf (degC); outputs are core and surface temperature.

Temperatures are carried in degC throughout.  The model is affine in
temperature, so no Kelvin conversion is needed anywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameterError

__all__ = [
    "ThermalParams",
    "ThermalState",
    "HeatInput",
    "StateSpaceModel",
    "DEFAULT_CELL",
    "build_continuous",
    "discretize",
    "step",
    "heat_generation",
    "surface_temperature",
    "core_temperature",
    "radial_profile",
    "pa_frequency_response",
]

# Relative tolerance for an explicitly supplied cell volume.
_VOLUME_RTOL = 1e-9

# Eigenvalue separation below which the repeated-root expansion is used.
_EIG_DEGENERATE_RTOL = 1e-9


@dataclass(frozen=True)
class ThermalParams:
    """Physical constants of the cell and its cooling boundary.

    Attributes:
        rho: density (kg/m^3)
        cp: specific heat capacity (J/(kg K))
        kt: radial thermal conductivity (W/(m K))
        h: surface convection coefficient (W/(m^2 K))
        r_o: outer radius (m)
        length: cell height (m)
        v_b: cell volume (m^3); recomputed as pi*r_o^2*length.  Passing an
            inconsistent value is an error.
    """

    rho: float
    cp: float
    kt: float
    h: float
    r_o: float
    length: float
    v_b: float = field(default=0.0)

    def __post_init__(self):
        for name in ("rho", "cp", "kt", "h", "r_o", "length"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise InvalidParameterError(
                    f"{name} must be finite and strictly positive, got {value!r}"
                )
        volume = math.pi * self.r_o**2 * self.length
        if self.v_b:
            if abs(self.v_b - volume) > _VOLUME_RTOL * volume:
                raise InvalidParameterError(
                    f"v_b={self.v_b!r} inconsistent with pi*r_o^2*length={volume!r}"
                )
        object.__setattr__(self, "v_b", volume)

    @property
    def alpha(self) -> float:
        """Thermal diffusivity kt / (rho * cp), in m^2/s."""
        return self.kt / (self.rho * self.cp)

    @property
    def side_area(self) -> float:
        """Lateral (cooled) surface area 2*pi*r_o*length, in m^2."""
        return 2.0 * math.pi * self.r_o * self.length


@dataclass(frozen=True)
class ThermalState:
    """Model state: volume-averaged temperature and radial gradient."""

    t_bar: float
    gamma_bar: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.t_bar) and math.isfinite(self.gamma_bar)):
            raise InvalidParameterError("thermal state must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.t_bar, self.gamma_bar])


@dataclass(frozen=True)
class HeatInput:
    """Model input: total heat generation (W) and coolant temperature (degC).

    Q may be transiently negative (e.g. from measurement noise in the heat
    reconstruction) and is passed through unclipped.
    """

    q: float
    t_inf: float

    def __post_init__(self):
        if not (math.isfinite(self.q) and math.isfinite(self.t_inf)):
            raise InvalidParameterError("heat input must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.q, self.t_inf])


@dataclass(frozen=True)
class StateSpaceModel:
    """2x2 state-space model, continuous or zero-order-hold discrete.

    Outputs: row 1 of C/D is core temperature, row 2 is surface temperature.
    """

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    d: np.ndarray
    discrete: bool = False
    dt: float | None = None

    def __post_init__(self):
        for name in "abcd":
            mat = np.ascontiguousarray(getattr(self, name), dtype=float)
            if mat.shape != (2, 2):
                raise InvalidParameterError(f"matrix {name} must be 2x2")
            mat.flags.writeable = False
            object.__setattr__(self, name, mat)
        if self.discrete and not (self.dt and self.dt > 0.0):
            raise InvalidParameterError("discrete model requires dt > 0")
        if not self.discrete and self.dt is not None:
            raise InvalidParameterError("continuous model must not carry dt")


# Identified constants of the 26650 LiFePO4 cell the package ships as its
# default configuration (65 mm x 26 mm, forced-air cooled).
DEFAULT_CELL = ThermalParams(
    rho=2107.0, cp=1171.6, kt=0.404, h=39.3, r_o=0.013, length=0.065
)


def heat_generation(current: float, voltage: float, u_ocv: float) -> float:
    """Irreversible heat I*(U_ocv - V), in W.

    Discharge current is positive; during discharge V < U_ocv, so the ohmic
    and overpotential losses come out positive.  The entropic term is out of
    scope.  Transiently negative values (noise) are returned as-is.
    """
    return current * (u_ocv - voltage)


def _surface_coeffs(params: ThermalParams, h: float | None = None):
    """Coefficients (on t_bar, gamma_bar, t_inf) of the surface temperature."""
    h = params.h if h is None else h
    den = 24.0 * params.kt + params.r_o * h
    k_tbar = 24.0 * params.kt / den
    k_gamma = 15.0 * params.kt * params.r_o / (2.0 * den)
    k_tinf = params.r_o * h / den
    return k_tbar, k_gamma, k_tinf


def surface_temperature(state: ThermalState, t_inf: float, params: ThermalParams) -> float:
    """Surface temperature implied by the state and the convective boundary."""
    k_tbar, k_gamma, k_tinf = _surface_coeffs(params)
    return k_tbar * state.t_bar + k_gamma * state.gamma_bar + k_tinf * t_inf


def core_temperature(state: ThermalState, t_inf: float, params: ThermalParams) -> float:
    """Core (r=0) temperature: 4*T_surf - 3*t_bar - (15/8)*r_o*gamma_bar."""
    t_surf = surface_temperature(state, t_inf, params)
    return 4.0 * t_surf - 3.0 * state.t_bar - 1.875 * params.r_o * state.gamma_bar


def radial_profile(state: ThermalState, t_inf: float, params: ThermalParams, r) -> float | np.ndarray:
    """Quartic radial temperature profile evaluated at radius r (m).

    Accepts a scalar or an array of radii.  Radii outside [0, r_o] are a
    domain error.
    """
    r = np.asarray(r, dtype=float)
    if np.any(r < 0.0) or np.any(r > params.r_o * (1.0 + 1e-12)):
        raise ValueError(f"radius outside [0, {params.r_o}]")
    t_surf = surface_temperature(state, t_inf, params)
    t_bar, gam = state.t_bar, state.gamma_bar
    rg = params.r_o * gam
    c0 = 4.0 * t_surf - 3.0 * t_bar - 1.875 * rg
    c2 = -18.0 * t_surf + 18.0 * t_bar + 7.5 * rg
    c4 = 15.0 * t_surf - 15.0 * t_bar - 5.625 * rg
    u2 = (r / params.r_o) ** 2
    out = c0 + u2 * (c2 + u2 * c4)
    return float(out) if out.ndim == 0 else out


def build_continuous(params: ThermalParams) -> StateSpaceModel:
    """Closed-form continuous-time matrices of the two-state model."""
    alpha, kt, h, r_o, v_b = params.alpha, params.kt, params.h, params.r_o, params.v_b
    den = 24.0 * kt + r_o * h
    a = np.array(
        [
            [-48.0 * alpha * h / (r_o * den), -15.0 * alpha * h / den],
            [
                -320.0 * alpha * h / (r_o**2 * den),
                -120.0 * alpha * (4.0 * kt + r_o * h) / (r_o**2 * den),
            ],
        ]
    )
    b = np.array(
        [
            [alpha / (kt * v_b), 48.0 * alpha * h / (r_o * den)],
            [0.0, 320.0 * alpha * h / (r_o**2 * den)],
        ]
    )
    c = np.array(
        [
            [(24.0 * kt - 3.0 * r_o * h) / den, -(120.0 * r_o * kt + 15.0 * r_o**2 * h) / (8.0 * den)],
            [24.0 * kt / den, 15.0 * r_o * kt / (2.0 * den)],
        ]
    )
    d = np.array(
        [
            [0.0, 4.0 * r_o * h / den],
            [0.0, r_o * h / den],
        ]
    )
    return StateSpaceModel(a, b, c, d)


def _eig_2x2(a: np.ndarray):
    """Eigenvalues of a real 2x2 matrix (complex pair handled)."""
    tr = a[0, 0] + a[1, 1]
    disc = (a[0, 0] - a[1, 1]) ** 2 + 4.0 * a[0, 1] * a[1, 0]
    if disc >= 0.0:
        root = math.sqrt(disc)
        return 0.5 * (tr + root), 0.5 * (tr - root)
    root = complex(0.0, math.sqrt(-disc))
    return 0.5 * (tr + root), 0.5 * (tr - root)


def _phi(z, dt: float):
    """phi(z) = (exp(z*dt) - 1) / z, with the z -> 0 limit."""
    zdt = z * dt
    if abs(zdt) < 1e-300:
        return dt
    if isinstance(zdt, complex):
        return (np.exp(zdt) - 1.0) / z
    return math.expm1(zdt) / z


def discretize(model: StateSpaceModel, dt: float) -> StateSpaceModel:
    """Exact zero-order-hold discretization: Abar=e^(A dt), Bbar=A^-1(Abar-I)B.

    The 2x2 matrix exponential is evaluated by spectral decomposition, with
    the repeated-eigenvalue expansion when the eigenvalues nearly coincide.
    C and D are copied unchanged.
    """
    if model.discrete:
        raise InvalidParameterError("model is already discrete")
    if not (dt > 0.0):
        raise InvalidParameterError(f"dt must be positive, got {dt!r}")
    a = model.a
    lam1, lam2 = _eig_2x2(a)
    eye = np.eye(2)
    scale = max(abs(lam1), abs(lam2), 1e-30)
    if abs(lam1 - lam2) > _EIG_DEGENERATE_RTOL * scale:
        # e^(A dt) = e^(l1 dt) (A - l2 I)/(l1-l2) + e^(l2 dt) (A - l1 I)/(l2-l1)
        p1 = (a - lam2 * eye) / (lam1 - lam2)
        p2 = (a - lam1 * eye) / (lam2 - lam1)
        a_bar = np.exp(lam1 * dt) * p1 + np.exp(lam2 * dt) * p2
        phi_a = _phi(lam1, dt) * p1 + _phi(lam2, dt) * p2
    else:
        # Repeated root: N = A - lam I is nilpotent by Cayley-Hamilton.
        lam = 0.5 * (lam1 + lam2)
        nil = a - lam * eye
        e = np.exp(lam * dt)
        a_bar = e * (eye + dt * nil)
        phi0 = _phi(lam, dt)
        dphi = (dt * e - phi0) / lam if abs(lam * dt) > 1e-8 else 0.5 * dt * dt
        phi_a = phi0 * eye + dphi * nil
    a_bar = np.real_if_close(a_bar, tol=1000)
    phi_a = np.real_if_close(phi_a, tol=1000)
    return StateSpaceModel(
        np.real(a_bar), np.real(phi_a @ model.b), model.c, model.d, discrete=True, dt=dt
    )


def step(model: StateSpaceModel, state: ThermalState, inp: HeatInput) -> ThermalState:
    """One zero-order-hold update of a discrete model."""
    if not model.discrete:
        raise InvalidParameterError("step requires a discrete model")
    x = model.a @ state.as_array() + model.b @ inp.as_array()
    return ThermalState(float(x[0]), float(x[1]))


def pa_frequency_response(params: ThermalParams, omega: float) -> np.ndarray:
    """H(j*omega) = D + C (j*omega*I - A)^-1 B of the continuous model.

    At omega=0 this is the DC gain -C A^-1 B + D (A is invertible for any
    positive parameters).
    """
    model = build_continuous(params)
    s = 1j * omega
    resolvent = np.linalg.solve(s * np.eye(2) - model.a, model.b.astype(complex))
    return model.d + model.c @ resolvent

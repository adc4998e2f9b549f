"""Closed-form frequency-domain solutions of the 1D cylindrical heat equation.

``analytical_frequency_response`` is the exact transfer matrix from
(Q in W, T_inf in degC) to (T_core, T_surf); ``qa_frequency_response`` is the
transfer matrix of the steady-profile ("quadratic assumption") inversion that
reconstructs the core temperature from the volume average and the surface
temperature.  Both are expressed through J0/J1 of complex argument via the
modified-Bessel identities I0(x) = J0(ix), I1(x) = -i J1(ix).

The wavenumber is a = sqrt(s/alpha) on the principal branch; every response
is an even function of a, asserted by tests.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .bessel import bessel_j
from .thermal import ThermalParams

__all__ = [
    "ComplexFreq",
    "analytical_frequency_response",
    "qa_frequency_response",
    "steady_state_profile",
    "dc_gain_matrix",
]

# Below this |a*r_o| the cancellation-prone combinations switch to series.
_SMALL_Z = 1e-4


@dataclass(frozen=True)
class ComplexFreq:
    """Laplace variable s and the wavenumber a with a^2 = s/alpha."""

    s: complex
    a: complex

    @classmethod
    def from_omega(cls, params: ThermalParams, omega: float) -> "ComplexFreq":
        s = 1j * omega
        a = cmath.sqrt(s / params.alpha)  # principal branch, Re(a) >= 0
        return cls(s, a)


def _i0(z: complex) -> complex:
    return bessel_j(0, 1j * z)


def _i1(z: complex) -> complex:
    return -1j * bessel_j(1, 1j * z)


def _i1_over_z(z: complex) -> complex:
    """I1(z)/z, finite at z=0 (value 1/2)."""
    if abs(z) < _SMALL_Z:
        z2 = z * z
        return 0.5 + z2 / 16.0 + z2 * z2 / 384.0
    return _i1(z) / z


def _i0_minus_one(z: complex) -> complex:
    """I0(z) - 1 without cancellation at small |z|."""
    if abs(z) > 6.0:
        return _i0(z) - 1.0
    q = 0.25 * z * z
    term = complex(q)
    total = term
    for k in range(2, 40):
        term *= q / (k * k)
        total += term
        if abs(term) <= 1e-18 * abs(total):
            break
    return total


def _i0_minus_2i1_over_z(z: complex) -> complex:
    """I0(z) - 2 I1(z)/z without cancellation at small |z| (~ z^2/8)."""
    if abs(z) > 0.5:
        return _i0(z) - 2.0 * _i1_over_z(z)
    q = 0.25 * z * z
    # series: I0 - 2 I1(z)/z = sum_{k>=1} q^k k / ((k!)^2 (k+1)), q = z^2/4
    term = complex(q)
    total = complex(0.0)
    for k in range(1, 40):
        total += term * k / (k + 1.0)
        term *= q / ((k + 1.0) * (k + 1.0))
        if k > 2 and abs(term) <= 1e-18 * max(abs(total), 1e-300):
            break
    return total


def dc_gain_matrix(params: ThermalParams) -> np.ndarray:
    """Exact zero-frequency gains of the cylinder with uniform heating.

    Column 1 is per watt of total heat; column 2 is the (unity) coolant gain.
    """
    r_o, kt, h, v_b = params.r_o, params.kt, params.h, params.v_b
    core = (r_o / (2.0 * h) + r_o**2 / (4.0 * kt)) / v_b
    surf = (r_o / (2.0 * h)) / v_b
    return np.array([[core, 1.0], [surf, 1.0]], dtype=complex)


def analytical_frequency_response(params: ThermalParams, omega: float) -> np.ndarray:
    """Exact 2x2 transfer matrix at s = j*omega.

    Rows are (T_core, T_surf); columns are (Q in W, T_inf).  omega=0 is
    evaluated by the closed-form limit.
    """
    if omega < 0:
        raise ValueError("omega must be non-negative")
    if omega == 0.0:
        return dc_gain_matrix(params)
    kt, h, r_o, v_b = params.kt, params.h, params.r_o, params.v_b
    freq = ComplexFreq.from_omega(params, omega)
    a = freq.a
    z = a * r_o
    hk = h / kt
    i0 = _i0(z)
    i1z = _i1_over_z(z)  # I1(z)/z
    delta = hk * i0 + a * a * r_o * i1z  # (h/kt) I0 + a I1
    # H11 numerator (Delta - h/kt) = a I1 + (h/kt)(I0 - 1), series-protected,
    # with the common a^2 factored out against the 1/(kt a^2) source term.
    num11 = r_o * i1z + hk * (_i0_minus_one(z) / (a * a))
    h11 = num11 / (kt * delta * v_b)
    h21 = r_o * i1z / (kt * delta * v_b)
    h12 = hk / delta
    h22 = hk * i0 / delta
    return np.array([[h11, h12], [h21, h22]])


def qa_frequency_response(params: ThermalParams, omega: float) -> np.ndarray:
    """Transfer matrix of the steady-profile (quadratic) core reconstruction.

    The core row follows T_core_qa = 2*T_bar - T_surf applied to the exact
    field; the surface row is identical to the exact solution because the
    surface temperature is taken as measured.
    """
    if omega < 0:
        raise ValueError("omega must be non-negative")
    if omega == 0.0:
        return dc_gain_matrix(params)
    kt, h, r_o, v_b = params.kt, params.h, params.r_o, params.v_b
    freq = ComplexFreq.from_omega(params, omega)
    a = freq.a
    z = a * r_o
    hk = h / kt
    i0 = _i0(z)
    i1z = _i1_over_z(z)
    delta = hk * i0 + a * a * r_o * i1z
    # G = 4 I1(z)/z - I0(z);  I0 - G = 2 (I0 - 2 I1(z)/z), series-protected.
    g = 4.0 * i1z - i0
    w_over_z2 = 2.0 * _i0_minus_2i1_over_z(z) / (z * z)
    qa11 = (r_o * i1z + hk * r_o**2 * w_over_z2) / (kt * delta * v_b)
    qa12 = hk * g / delta
    exact = analytical_frequency_response(params, omega)
    return np.array([[qa11, qa12], [exact[1, 0], exact[1, 1]]])


def steady_state_profile(q: float, t_inf: float, params: ThermalParams, n_nodes: int = 201):
    """Steady radial profile under uniform heating: quadratic in r.

    T(r) = T_surf + dT_c * (1 - r^2/r_o^2) with the surface energy balance
    q = h * A_side * (T_surf - T_inf) and dT_c = q * r_o^2 / (4 kt V_b).
    Returns a RadialField.
    """
    from .fdmodel import RadialField  # local import to avoid a cycle

    if not math.isfinite(q) or not math.isfinite(t_inf):
        raise ValueError("q and t_inf must be finite")
    t_surf = t_inf + q / (params.h * params.side_area)
    dt_core = q * params.r_o**2 / (4.0 * params.kt * params.v_b)
    nodes = np.linspace(0.0, params.r_o, n_nodes)
    temps = t_surf + dt_core * (1.0 - (nodes / params.r_o) ** 2)
    return RadialField(nodes=nodes, temps=temps, time=math.inf)

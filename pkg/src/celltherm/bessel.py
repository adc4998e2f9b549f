"""Bessel functions of the first kind, orders 0 and 1, for complex argument.

Only J0 and J1 are provided; that is all the frequency-domain solutions of
the cylindrical heat equation need.  The power series is used for |z| <= 12
and a Hankel-type asymptotic expansion with adaptive truncation beyond.
"""

from __future__ import annotations

import cmath

__all__ = ["bessel_j", "SERIES_CUTOFF", "MAX_ABS_ARG"]

SERIES_CUTOFF = 12.0
MAX_ABS_ARG = 1e4

_QUARTER_PI = 0.25 * cmath.pi


def bessel_j(order: int, z: complex) -> complex:
    """J0(z) or J1(z) for complex z, |z| < 1e4.

    Relative accuracy is ~1e-11 or better over the thermal-frequency range
    of interest (tested against an arbitrary-precision series oracle).
    """
    if order not in (0, 1):
        raise ValueError(f"order must be 0 or 1, got {order!r}")
    z = complex(z)
    if abs(z) >= MAX_ABS_ARG:
        raise ValueError(f"|z| must be below {MAX_ABS_ARG:g}, got {abs(z):g}")
    if abs(z) <= SERIES_CUTOFF:
        return _series(order, z)
    return _asymptotic(order, z)


def _series(order: int, z: complex) -> complex:
    """Ascending power series, adequate up to the cutoff."""
    if z == 0:
        return complex(1.0 if order == 0 else 0.0)
    q = -0.25 * z * z
    term = complex(1.0)
    total = term
    for k in range(1, 120):
        term *= q / (k * (k + order))
        total += term
        if abs(term) <= 1e-18 * abs(total):
            break
    if order == 1:
        total *= 0.5 * z
    return total


def _asymptotic(order: int, z: complex) -> complex:
    """Hankel asymptotic expansion, truncated adaptively at the smallest term.

    J_n(z) = sqrt(2/(pi z)) * (P cos(w) - Q sin(w)),  w = z - (n/2 + 1/4) pi,
    valid away from the negative real axis; J0 is even and J1 odd, so
    arguments with Re(z) < 0 are reflected first.
    """
    sign = 1.0
    if z.real < 0.0:
        z = -z
        if order == 1:
            sign = -1.0
    mu = 4.0 * order * order
    # c_k = a_k(n) / z^k built recursively; even k feed P, odd k feed Q.
    p_sum = complex(1.0)
    q_sum = complex(0.0)
    c = complex(1.0)
    prev = abs(c)
    for k in range(1, 60):
        c *= (mu - (2.0 * k - 1.0) ** 2) / (8.0 * k * z)
        mag = abs(c)
        if mag >= prev:
            break  # divergence onset: stop at smallest term
        half, rem = divmod(k, 2)
        if rem == 0:
            p_sum += c * (-1.0) ** half
        else:
            q_sum += c * (-1.0) ** half
        if mag <= 1e-18:
            break
        prev = mag
    w = z - (0.5 * order + 0.25) * cmath.pi
    amp = cmath.sqrt(2.0 / (cmath.pi * z))
    return sign * amp * (p_sum * cmath.cos(w) - q_sum * cmath.sin(w))

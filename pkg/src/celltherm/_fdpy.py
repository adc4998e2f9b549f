"""Pure-Python (numpy/scipy) backward-Euler stepping kernel.

Fallback used when the compiled extension is unavailable.  Must match
``_fdcore.run_steps`` argument-for-argument; the compiled kernel is just a
faster version of this loop.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import solve_banded


def run_steps(temps, q_series, tinf_series, dt, mass, sub, diag, sup,
              u_conv, w, v_b, snap_idx, snaps, core, surf, tbar):
    """Advance the implicit scheme over the whole input series.

    Arguments mirror the compiled kernel: ``temps`` is overwritten in place
    with the final field; per-step core/surface/volume-average series and the
    requested field snapshots are filled in.  Returns
    (max_step_residual_rel, cumulative_residual_rel) of the discrete energy
    balance.
    """
    n = temps.shape[0]
    n_steps = q_series.shape[0]
    rho_cp_w = mass * dt  # rho*cp*w_i
    w_frac = w / w.sum()
    src = w / v_b
    sum_src = src.sum()

    ab = np.zeros((3, n))
    ab[0, 1:] = sup[:-1]
    ab[1, :] = diag
    ab[2, :-1] = sub[1:]

    snap_pos = 0
    if snap_pos < len(snap_idx) and snap_idx[snap_pos] == 0:
        snaps[snap_pos, :] = temps
        snap_pos += 1
    core[0] = temps[0]
    surf[0] = temps[-1]
    tbar[0] = float(w_frac @ temps)

    max_rel = 0.0
    resid_sum = 0.0
    thru_sum = 0.0
    t_old = temps
    for k in range(n_steps):
        q_k = q_series[k]
        tinf_k = tinf_series[k]
        rhs = mass * t_old + q_k * src
        rhs[-1] += u_conv * tinf_k
        t_new = solve_banded((1, 1), ab, rhs, overwrite_b=True, check_finite=False)

        delta_e = float(rho_cp_w @ (t_new - t_old))
        heat_in = q_k * sum_src * dt
        heat_out = u_conv * (t_new[-1] - tinf_k) * dt
        residual = delta_e - heat_in + heat_out
        throughput = abs(heat_in) + abs(heat_out)
        rel = abs(residual) / max(throughput, abs(delta_e), 1e-30)
        if rel > max_rel:
            max_rel = rel
        resid_sum += residual
        thru_sum += throughput

        t_old = t_new
        core[k + 1] = t_new[0]
        surf[k + 1] = t_new[-1]
        tbar[k + 1] = float(w_frac @ t_new)
        if snap_pos < len(snap_idx) and snap_idx[snap_pos] == k + 1:
            snaps[snap_pos, :] = t_new
            snap_pos += 1

    temps[:] = t_old
    cum_rel = abs(resid_sum) / max(thru_sum, 1e-30)
    return max_rel, cum_rel

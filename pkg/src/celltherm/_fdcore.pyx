# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled backward-Euler stepping kernel (Thomas solve per step).

Semantics are identical to ``_fdpy.run_steps``; this version exists because
the sequential time-stepping loop dominates the runtime of oracle-driven
simulations and cannot be vectorized across steps.
"""

from libc.stdlib cimport free, malloc


def run_steps(double[::1] temps, double[::1] q_series, double[::1] tinf_series,
              double dt, double[::1] mass, double[::1] sub, double[::1] diag,
              double[::1] sup, double u_conv, double[::1] w, double v_b,
              long[::1] snap_idx, double[:, ::1] snaps, double[::1] core,
              double[::1] surf, double[::1] tbar):
    cdef Py_ssize_t n = temps.shape[0]
    cdef Py_ssize_t n_steps = q_series.shape[0]
    cdef Py_ssize_t n_snaps = snap_idx.shape[0]
    cdef Py_ssize_t i, k, snap_pos
    cdef double q_k, tinf_k, acc
    cdef double delta_e, heat_in, heat_out, residual, throughput, rel
    cdef double max_rel = 0.0, resid_sum = 0.0, thru_sum = 0.0
    cdef double w_sum = 0.0, sum_src = 0.0

    cdef double *denom = <double *> malloc(5 * n * sizeof(double))
    if denom == NULL:
        raise MemoryError()
    cdef double *csup = denom + n
    cdef double *dp = denom + 2 * n
    cdef double *t_old = denom + 3 * n
    cdef double *w_frac = denom + 4 * n

    try:
        for i in range(n):
            w_sum += w[i]
        for i in range(n):
            w_frac[i] = w[i] / w_sum
            sum_src += w[i] / v_b
            t_old[i] = temps[i]

        # Thomas factorization of the constant tridiagonal system.
        denom[0] = diag[0]
        csup[0] = sup[0] / denom[0]
        for i in range(1, n):
            denom[i] = diag[i] - sub[i] * csup[i - 1]
            if i < n - 1:
                csup[i] = sup[i] / denom[i]

        snap_pos = 0
        if n_snaps > 0 and snap_idx[0] == 0:
            for i in range(n):
                snaps[0, i] = t_old[i]
            snap_pos = 1
        core[0] = t_old[0]
        surf[0] = t_old[n - 1]
        acc = 0.0
        for i in range(n):
            acc += w_frac[i] * t_old[i]
        tbar[0] = acc

        for k in range(n_steps):
            q_k = q_series[k]
            tinf_k = tinf_series[k]

            # forward sweep on the right-hand side
            acc = mass[0] * t_old[0] + q_k * w[0] / v_b
            dp[0] = acc / denom[0]
            for i in range(1, n):
                acc = mass[i] * t_old[i] + q_k * w[i] / v_b
                if i == n - 1:
                    acc += u_conv * tinf_k
                dp[i] = (acc - sub[i] * dp[i - 1]) / denom[i]
            # back substitution, accumulating energy terms in the same pass
            temps[n - 1] = dp[n - 1]
            for i in range(n - 2, -1, -1):
                temps[i] = dp[i] - csup[i] * temps[i + 1]

            delta_e = 0.0
            acc = 0.0
            for i in range(n):
                delta_e += mass[i] * dt * (temps[i] - t_old[i])
                acc += w_frac[i] * temps[i]
                t_old[i] = temps[i]
            heat_in = q_k * sum_src * dt
            heat_out = u_conv * (temps[n - 1] - tinf_k) * dt
            residual = delta_e - heat_in + heat_out
            throughput = abs(heat_in) + abs(heat_out)
            rel = abs(residual)
            if throughput > abs(delta_e):
                if throughput > 1e-30:
                    rel /= throughput
                else:
                    rel /= 1e-30
            elif abs(delta_e) > 1e-30:
                rel /= abs(delta_e)
            else:
                rel /= 1e-30
            if rel > max_rel:
                max_rel = rel
            resid_sum += residual
            thru_sum += throughput

            core[k + 1] = temps[0]
            surf[k + 1] = temps[n - 1]
            tbar[k + 1] = acc
            if snap_pos < n_snaps and snap_idx[snap_pos] == k + 1:
                for i in range(n):
                    snaps[snap_pos, i] = temps[i]
                snap_pos += 1
    finally:
        free(denom)

    if thru_sum > 1e-30:
        return max_rel, abs(resid_sum) / thru_sum
    return max_rel, abs(resid_sum) / 1e-30

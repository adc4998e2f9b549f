"""Offline thermal-parameter identification from temperature telemetry.

cp, kt, and h (any subset) are fitted by derivative-free Nelder-Mead
minimization of the Euclidean distance between the open-loop model
predictions and the recorded core and surface temperatures.  Density is
fixed beforehand from the cell mass and volume.

The simplex works in log-parameter space: the parameters span four orders of
magnitude (cp ~ 1e3, kt ~ 1e-1) and a raw-scale simplex stalls on the badly
conditioned axes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DataError, InvalidParameterError
from .thermal import ThermalParams, build_continuous, discretize, heat_generation

__all__ = [
    "FitProblem",
    "FitReport",
    "objective",
    "fit_thermal_params",
    "density_from_mass",
    "nelder_mead",
    "open_loop_outputs",
]

FREE_PARAM_NAMES = ("cp", "kt", "h")

# Out-of-bounds candidates get a large finite penalty that grows with the
# violation, steering the simplex back into the feasible region.
_PENALTY_BASE = 1e12

DEFAULT_BOUNDS = {"cp": (50.0, 2e4), "kt": (1e-3, 50.0), "h": (0.5, 5e3)}


@dataclass(frozen=True)
class FitProblem:
    """Dataset, free parameters, starting point and box bounds of one fit."""

    records: tuple
    free_params: tuple = FREE_PARAM_NAMES
    initial_guess: ThermalParams | None = None
    bounds: dict = field(default_factory=lambda: dict(DEFAULT_BOUNDS))
    u_ocv: float = 3.3

    def __post_init__(self):
        records = tuple(self.records)
        if len(records) < 2:
            raise DataError("fit dataset needs at least two records")
        for rec in records[:1]:
            if rec.t_core_truth is None or rec.t_surf_truth is None:
                raise DataError("fit dataset must carry core and surface temperatures")
        free = tuple(self.free_params)
        if not free or any(name not in FREE_PARAM_NAMES for name in free):
            raise InvalidParameterError(f"free_params must be a subset of {FREE_PARAM_NAMES}")
        object.__setattr__(self, "records", records)
        object.__setattr__(self, "free_params", free)
        if self.initial_guess is not None:
            for name in free:
                lo, hi = self.bounds[name]
                value = getattr(self.initial_guess, name)
                if not lo <= value <= hi:
                    raise InvalidParameterError(
                        f"initial {name}={value!r} outside bounds [{lo}, {hi}]"
                    )


@dataclass(frozen=True)
class FitReport:
    objective: float
    rmse_core: float
    rmse_surf: float
    iterations: int
    n_evals: int
    converged: bool


def _dataset_arrays(records, u_ocv):
    time = np.array([r.time for r in records])
    dt = np.diff(time)
    if np.any(dt <= 0.0):
        raise DataError("fit dataset time must be strictly increasing")
    step = float(dt[0])
    if np.any(np.abs(dt - step) > 1e-6 * max(step, 1.0)):
        raise DataError("fit dataset must be uniformly sampled")
    q = np.array([heat_generation(r.current, r.voltage, u_ocv) for r in records])
    t_inf = np.array([r.t_inf for r in records])
    core = np.array([float("nan") if r.t_core_truth is None else r.t_core_truth for r in records])
    surf = np.array([float("nan") if r.t_surf_truth is None else r.t_surf_truth for r in records])
    if not (np.all(np.isfinite(core)) and np.all(np.isfinite(surf))):
        raise DataError("fit dataset must carry core and surface temperatures")
    return step, q, t_inf, core, surf


def open_loop_outputs(params: ThermalParams, step: float, q, t_inf):
    """Open-loop core/surface prediction over a uniformly sampled drive.

    The rollout starts at thermal equilibrium with the first coolant sample,
    which is how the synthetic datasets begin.
    """
    model = discretize(build_continuous(params), step)
    a11, a12 = model.a[0]
    a21, a22 = model.a[1]
    b11, b12 = model.b[0]
    b21, b22 = model.b[1]
    n = len(q)
    xs = np.empty((n, 2))
    x0, x1 = float(t_inf[0]), 0.0
    xs[0, 0], xs[0, 1] = x0, x1
    for k in range(n - 1):
        u0, u1 = q[k], t_inf[k]
        x0, x1 = (
            a11 * x0 + a12 * x1 + b11 * u0 + b12 * u1,
            a21 * x0 + a22 * x1 + b21 * u0 + b22 * u1,
        )
        xs[k + 1, 0], xs[k + 1, 1] = x0, x1
    u = np.column_stack([q, t_inf])
    y = xs @ model.c.T + u @ model.d.T
    return y[:, 0], y[:, 1]


def objective(params: ThermalParams, records, u_ocv: float = 3.3) -> float:
    """Euclidean distance between simulated and recorded temperatures."""
    step, q, t_inf, core, surf = _dataset_arrays(records, u_ocv)
    core_m, surf_m = open_loop_outputs(params, step, q, t_inf)
    return float(np.sqrt(np.sum((core_m - core) ** 2) + np.sum((surf_m - surf) ** 2)))


def nelder_mead(fn, x0, initial_step=0.25, tol=1e-6, max_iter=2000):
    """Nelder-Mead simplex with the standard 1 / 2 / 0.5 / 0.5 coefficients.

    Converges when the simplex diameter falls below ``tol`` relative to the
    simplex scale.  Returns (x_best, f_best, iterations, n_evals, converged).
    """
    x0 = np.asarray(x0, dtype=float)
    n = len(x0)
    simplex = [x0]
    for i in range(n):
        vertex = x0.copy()
        vertex[i] += initial_step
        simplex.append(vertex)
    values = [fn(x) for x in simplex]
    n_evals = n + 1
    iterations = 0
    converged = False

    while iterations < max_iter:
        order = np.argsort(values)
        simplex = [simplex[i] for i in order]
        values = [values[i] for i in order]
        spread = max(np.max(np.abs(v - simplex[0])) for v in simplex[1:])
        scale = max(1.0, float(np.max(np.abs(simplex[0]))))
        if spread <= tol * scale:
            converged = True
            break
        iterations += 1

        centroid = np.mean(simplex[:-1], axis=0)
        worst = simplex[-1]
        reflected = centroid + 1.0 * (centroid - worst)
        f_ref = fn(reflected)
        n_evals += 1
        if f_ref < values[0]:
            expanded = centroid + 2.0 * (centroid - worst)
            f_exp = fn(expanded)
            n_evals += 1
            if f_exp < f_ref:
                simplex[-1], values[-1] = expanded, f_exp
            else:
                simplex[-1], values[-1] = reflected, f_ref
        elif f_ref < values[-2]:
            simplex[-1], values[-1] = reflected, f_ref
        else:
            contracted = centroid + 0.5 * (worst - centroid)
            f_con = fn(contracted)
            n_evals += 1
            if f_con < values[-1]:
                simplex[-1], values[-1] = contracted, f_con
            else:
                # shrink toward the best vertex
                for i in range(1, n + 1):
                    simplex[i] = simplex[0] + 0.5 * (simplex[i] - simplex[0])
                    values[i] = fn(simplex[i])
                    n_evals += 1

    order = np.argsort(values)
    best = order[0]
    return simplex[best], values[best], iterations, n_evals, converged


def fit_thermal_params(problem: FitProblem):
    """Fit the free thermal parameters of a FitProblem.

    Returns (ThermalParams, FitReport).  Non-convergence returns the best
    point found with ``converged=False``.
    """
    base = problem.initial_guess
    if base is None:
        raise InvalidParameterError("fit requires an initial guess")
    step, q, t_inf, core, surf = _dataset_arrays(problem.records, problem.u_ocv)
    free = problem.free_params

    def params_from_log(z):
        updates = {name: math.exp(z[i]) for i, name in enumerate(free)}
        return replace(base, v_b=0.0, **updates)

    def penalized(z):
        excess = 0.0
        for i, name in enumerate(free):
            lo, hi = problem.bounds[name]
            value = math.exp(z[i])
            if value < lo:
                excess += (lo - value) / lo
            elif value > hi:
                excess += (value - hi) / hi
        if excess > 0.0:
            return _PENALTY_BASE * (1.0 + excess)
        candidate = params_from_log(z)
        core_m, surf_m = open_loop_outputs(candidate, step, q, t_inf)
        return float(np.sqrt(np.sum((core_m - core) ** 2) + np.sum((surf_m - surf) ** 2)))

    z0 = np.array([math.log(getattr(base, name)) for name in free])
    z_best, f_best, iterations, n_evals, converged = nelder_mead(penalized, z0)
    fitted = params_from_log(z_best)
    core_m, surf_m = open_loop_outputs(fitted, step, q, t_inf)
    report = FitReport(
        objective=float(f_best),
        rmse_core=float(np.sqrt(np.mean((core_m - core) ** 2))),
        rmse_surf=float(np.sqrt(np.mean((surf_m - surf) ** 2))),
        iterations=iterations,
        n_evals=n_evals,
        converged=converged,
    )
    return fitted, report


def density_from_mass(mass: float, params: ThermalParams) -> float:
    """Cell density from measured mass and the geometric volume."""
    if not (mass > 0.0 and math.isfinite(mass)):
        raise InvalidParameterError(f"mass must be positive, got {mass!r}")
    return mass / params.v_b

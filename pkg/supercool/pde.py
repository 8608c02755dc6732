# coding: utf-8
#
# Fixed-boundary Robin problem on [0, x_max]:
#
#   p_t = 1/2 p_xx + Λ'(t) p_x
#   p_x(t, 0) = (α/eps - 2Λ'(t)) p(t, 0)
#   p(t, x_max) = 0
#
# Implicit Euler in time, centered diffusion, forward (upwind) advection and a
# ghost node at x = 0. Every step is an M-matrix solve, so the discrete
# maximum principle 0 <= p <= max p(0, .) holds node by node.

import csv
import math
import time
from collections import namedtuple
from dataclasses import dataclass
from typing import Optional

import humanize
import numpy as np
import scipy.linalg
from logzero import logger
from scipy.integrate import cumulative_trapezoid

from supercool.abcd import WindowEvaluator
from supercool.core import BoundaryPath, ModelParams, MollifiedDensity, TimeGrid
from supercool.exceptions import (CFLUnreasonableError, GridMismatchError, OutputError,
                                  PreconditionLipschitzError)
from supercool.utils import format_float, readonly, require_positive_epsilon

TRUNCATION_SIGMAS = 6.0
MASS_WARNING = 1e-3


@dataclass(frozen=True)
class SpaceGrid:
    x_max: float
    n_cells: int

    def __post_init__(self):
        if int(self.n_cells) != self.n_cells or self.n_cells < 2:
            raise ValueError("n_cells must be an integer >= 2", self.n_cells)
        if not self.x_max > 0:
            raise ValueError("x_max must be > 0", self.x_max)
        object.__setattr__(self, "n_cells", int(self.n_cells))
        object.__setattr__(self, "x_max", float(self.x_max))

    @property
    def dx(self) -> float:
        return self.x_max / self.n_cells

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n_cells + 1) * self.dx

    @classmethod
    def for_density(cls, f_eps: MollifiedDensity, dx: float, t_max: float,
                    x_max: Optional[float] = None) -> "SpaceGrid":
        """ x_max defaults to support_upper + 6 sqrt(t_max), rounded up to a multiple of dx """
        if not dx > 0:
            raise ValueError("dx must be > 0", dx)
        if x_max is None:
            x_max = f_eps.support_upper + TRUNCATION_SIGMAS * math.sqrt(t_max)
        n_cells = max(2, int(math.ceil(x_max / dx - 1e-9)))
        return cls(n_cells * dx, n_cells)

    def refined(self, factor: int = 2) -> "SpaceGrid":
        return SpaceGrid(self.x_max, self.n_cells * factor)


@dataclass(frozen=True, eq=False)
class DensityField:
    """
    values holds the kept time slices (rows at kept_steps); boundary_trace and
    mass cover every step, value_min/value_max every node of every step.
    """
    tgrid: TimeGrid
    xgrid: SpaceGrid
    values: np.ndarray
    kept_steps: np.ndarray
    boundary_trace: np.ndarray
    mass: np.ndarray
    value_min: float
    value_max: float
    sup_bound: float

    def __post_init__(self):
        for name in ("values", "boundary_trace", "mass"):
            object.__setattr__(self, name, readonly(getattr(self, name)))
        object.__setattr__(self, "kept_steps", np.asarray(self.kept_steps, dtype=int))

    @property
    def kept_times(self) -> np.ndarray:
        return self.kept_steps * self.tgrid.dt

    def slice_at(self, t: float) -> np.ndarray:
        k = self.tgrid.index_of(t)
        rows = np.flatnonzero(self.kept_steps == k)
        if not len(rows):
            raise KeyError("time slice not kept", t)
        return self.values[rows[0]]


class RobinStepper(object):
    """ one implicit Euler step per call; the matrix depends on the step's Λ' """

    def __init__(self, xgrid: SpaceGrid, params: ModelParams, dt: float,
                 robin_override: Optional[float] = None):
        self.xgrid = xgrid
        self.params = params
        self.dt = dt
        self.robin_override = robin_override
        self._n = xgrid.n_cells  # unknowns p_0..p_{N-1}

    def robin_coefficient(self, slope: float) -> float:
        if self.robin_override is not None:
            return float(self.robin_override)
        return self.params.alpha / self.params.epsilon - 2.0 * slope

    def banded(self, slope: float) -> np.ndarray:
        """
        Raises:
            CFLUnreasonableError
        """
        kappa = self.robin_coefficient(slope)
        if slope < 0 or kappa < 0 or not np.isfinite(kappa):
            raise CFLUnreasonableError(
                "no M-matrix for slope=%g, robin=%g" % (slope, kappa))
        dx = self.xgrid.dx
        a = 0.5 / dx**2
        b = slope / dx
        n = self._n
        ab = np.empty((3, n))
        ab[0, 1:] = -(a + b)
        ab[0, 1] = -(2.0 * a + b)
        ab[0, 0] = 0.0
        ab[1, :] = 1.0 / self.dt + 2.0 * a + b
        ab[1, 0] += kappa / dx
        ab[2, :-1] = -a
        ab[2, -1] = 0.0
        return ab

    def step(self, p: np.ndarray, slope: float) -> np.ndarray:
        rhs = p[:-1] / self.dt
        out = np.zeros_like(p)
        out[:-1] = scipy.linalg.solve_banded((1, 1), self.banded(slope), rhs,
                                             check_finite=False)
        return out


def trapezoid_mass(p: np.ndarray, dx: float) -> float:
    return float(dx * (0.5 * p[0] + p[1:-1].sum() + 0.5 * p[-1]))


def _check_inputs(f_eps: MollifiedDensity, lam: BoundaryPath, params: ModelParams,
                  xgrid: SpaceGrid):
    if not xgrid.x_max > f_eps.support_upper:
        raise GridMismatchError("x_max %g does not exceed the support of f_eps (%g)"
                                % (xgrid.x_max, f_eps.support_upper))
    bound = f_eps.sup_norm / params.epsilon
    if lam.lipschitz_bound > bound + 1e-12:
        raise PreconditionLipschitzError(
            "Lipschitz bound %g exceeds sup f_eps / eps = %g" % (lam.lipschitz_bound, bound))


@require_positive_epsilon
def solve_robin_pde(f_eps: MollifiedDensity, lam: BoundaryPath, params: ModelParams,
                    xgrid: SpaceGrid, robin_override: Optional[float] = None,
                    keep_every: int = 1) -> DensityField:
    """
    Args:
        robin_override: replaces α/eps - 2Λ' (0 gives a zero-flux wall)
        keep_every: store every n-th time slice (the last one is always kept)

    Raises:
        CFLUnreasonableError, PreconditionLipschitzError, GridMismatchError
    """
    _check_inputs(f_eps, lam, params, xgrid)
    tgrid = lam.grid
    stepper = RobinStepper(xgrid, params, tgrid.dt, robin_override)
    slopes = lam.slopes
    n_steps = tgrid.n_steps

    p = f_eps.evaluate(xgrid.nodes)
    p[-1] = 0.0
    trace = np.empty(n_steps + 1)
    mass = np.empty(n_steps + 1)
    trace[0], mass[0] = p[0], trapezoid_mass(p, xgrid.dx)
    lo, hi = float(p.min()), float(p.max())
    kept, rows = [0], [p.copy()]

    start = time.time()
    for k in range(n_steps):
        p = stepper.step(p, slopes[k])
        trace[k + 1] = p[0]
        mass[k + 1] = trapezoid_mass(p, xgrid.dx)
        lo, hi = min(lo, float(p.min())), max(hi, float(p.max()))
        if (k + 1) % keep_every == 0 or k + 1 == n_steps:
            kept.append(k + 1)
            rows.append(p.copy())
    logger.debug("robin pde: %d steps x %d nodes in %s", n_steps, xgrid.n_cells + 1,
                 humanize.naturaldelta(time.time() - start))
    return DensityField(tgrid, xgrid, np.array(rows), np.array(kept), trace, mass, lo, hi,
                        f_eps.sup_norm)


@require_positive_epsilon
def evaluate_F_pde(field: DensityField, params: ModelParams) -> BoundaryPath:
    """ t_k -> (1/eps) * trapezoid integral of p(., 0) over [0, t_k] """
    trace = np.maximum(field.boundary_trace, 0.0)
    values = cumulative_trapezoid(trace, dx=field.tgrid.dt, initial=0.0) / params.epsilon
    return BoundaryPath(field.tgrid, values, field.sup_bound / params.epsilon)


def mass_identity_residual(field: DensityField, F: BoundaryPath,
                           params: ModelParams) -> np.ndarray:
    """ |mass + (α/2) F - 1| at every grid time """
    residual = np.abs(field.mass + 0.5 * params.alpha * F.values - 1.0)
    worst = float(residual.max())
    if worst > MASS_WARNING:
        logger.warning("mass identity residual %.3g exceeds %g", worst, MASS_WARNING)
    return residual


class RichardsonEstimate(namedtuple("RichardsonEstimate",
                                    ["coarse", "fine", "extrapolated", "error"])):
    """ F values on the coarse grid; error is |F_fine - F_coarse| per time """
    __slots__ = ()

    @property
    def max_error(self) -> float:
        return float(np.max(self.error))


def richardson_F_pde(f_eps: MollifiedDensity, lam: BoundaryPath, params: ModelParams,
                     xgrid: SpaceGrid) -> RichardsonEstimate:
    """ one Richardson step from (dt, dx) to (dt/2, dx/2) """
    keep = lam.grid.n_steps
    coarse = evaluate_F_pde(solve_robin_pde(f_eps, lam, params, xgrid, keep_every=keep),
                            params)
    fine_lam = lam.resample(lam.grid.refined(2))
    fine_field = solve_robin_pde(f_eps, fine_lam, params, xgrid.refined(2),
                                 keep_every=2 * keep)
    fine = evaluate_F_pde(fine_field, params).values[::2]
    return RichardsonEstimate(coarse.values, readonly(fine), readonly(2.0 * fine - coarse.values),
                              readonly(np.abs(fine - coarse.values)))


class PdeWindowEvaluator(WindowEvaluator):
    """ state is (p at step k, F at step k) """

    def __init__(self, f_eps: MollifiedDensity, params: ModelParams, grid: TimeGrid,
                 xgrid: SpaceGrid):
        super().__init__(params, grid)
        if not xgrid.x_max > f_eps.support_upper:
            raise GridMismatchError("x_max %g does not exceed the support of f_eps (%g)"
                                    % (xgrid.x_max, f_eps.support_upper))
        self.f_eps = f_eps
        self.xgrid = xgrid
        self.stepper = RobinStepper(xgrid, params, grid.dt)

    @property
    def name(self) -> str:
        return "pde"

    def initial_state(self):
        p = self.f_eps.evaluate(self.xgrid.nodes)
        p[-1] = 0.0
        return p, 0.0

    def advance(self, state, lam, k0, k1):
        p, F = state
        dt = self.grid.dt
        scale = 0.5 * dt / self.params.epsilon
        out = np.empty(k1 - k0)
        for j, k in enumerate(range(k0, k1)):
            prev = max(p[0], 0.0)
            p = self.stepper.step(p, (lam[k + 1] - lam[k]) / dt)
            F = F + scale * (prev + max(p[0], 0.0))
            out[j] = F
        return out, (p, F), np.zeros(k1 - k0)


class PhysicalField(namedtuple("PhysicalField", ["times", "x", "values"])):
    """ u(t, x) on kept slices; NaN marks the solid region x < Λ(t) """
    __slots__ = ()


def to_physical(field: DensityField, boundary: BoundaryPath,
                x: Optional[np.ndarray] = None) -> PhysicalField:
    """ u(t, x) = p(t, x - Λ(t)) """
    if boundary.grid != field.tgrid:
        raise GridMismatchError("boundary and field live on different time grids")
    if x is None:
        x = np.arange(0.0, field.xgrid.x_max + boundary.values[-1] + 0.5 * field.xgrid.dx,
                      field.xgrid.dx)
    nodes = field.xgrid.nodes
    times = field.kept_times
    fronts = boundary.values[field.kept_steps]
    out = np.empty((len(times), len(x)))
    for row, (front, p) in enumerate(zip(fronts, field.values)):
        local = x - front
        out[row] = np.where(local >= 0.0, np.interp(local, nodes, p, right=0.0), np.nan)
    return PhysicalField(readonly(times), readonly(x), out)


class FrontAudit(namedtuple("FrontAudit", ["kinetic", "stefan", "slope_kinetic"])):
    """
    kinetic: max |Λ(t) - (1/eps) int_0^t p(s, 0) ds|
    stefan: max over kept slices of |α Λ' - (u_x + 2 Λ' u)| at the front
    slope_kinetic: max |Λ' - p(., 0)/eps| on steps, trace averaged over the step
    """
    __slots__ = ()


def front_audit(field: DensityField, boundary: BoundaryPath, params: ModelParams) -> FrontAudit:
    """ residuals of the front conditions Λ' = u/eps and αΛ' = u_x + 2Λ'u for a solved Λ """
    if boundary.grid != field.tgrid:
        raise GridMismatchError("boundary and field live on different time grids")
    F = evaluate_F_pde(field, params)
    kinetic = float(np.max(np.abs(boundary.values - F.values)))

    slopes = boundary.slopes
    trace = np.maximum(field.boundary_trace, 0.0)
    averaged = 0.5 * (trace[:-1] + trace[1:]) / params.epsilon
    slope_kinetic = float(np.max(np.abs(slopes - averaged)))

    dx = field.xgrid.dx
    stefan = 0.0
    for k, p in zip(field.kept_steps, field.values):
        if k == 0:
            continue
        s = slopes[k - 1]
        ux = (-3.0 * p[0] + 4.0 * p[1] - p[2]) / (2.0 * dx)
        stefan = max(stefan, abs(params.alpha * s - (ux + 2.0 * s * p[0])))
    return FrontAudit(kinetic, float(stefan), slope_kinetic)


def dump_field_csv(field: DensityField, path: str):
    """
    Write (t, x, p) rows for every kept slice.

    Raises:
        OutputError
    """
    nodes = field.xgrid.nodes
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "x", "p"])
            for t, p in zip(field.kept_times, field.values):
                ts = format_float(t)
                for x, v in zip(nodes, p):
                    w.writerow([ts, format_float(x), format_float(v)])
    except OSError as e:
        raise OutputError("cannot write field dump", path, str(e))
    logger.info("field slices written to %s", path)

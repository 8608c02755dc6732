# coding: utf-8
#
# Domain types shared by every solver: grids, boundaries, initial densities
# and their mollified versions.

import dataclasses
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from logzero import logger
from scipy import optimize

from supercool.exceptions import (NegativeDensityError, NotNormalizedError,
                                  SupercriticalSupNormError,
                                  NonPositiveEpsilonError)
from supercool.kernel import reference_kernel
from supercool.utils import readonly, require_positive_epsilon

MASS_TOLERANCE = 1e-12
CDF_TABLE_SIZE = 4096
UNIFORM_CLAMP = 1e-15

_EVAL_CHUNK = 4096


@dataclass(frozen=True)
class TimeGrid:
    t_max: float
    n_steps: int

    def __post_init__(self):
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise ValueError("n_steps must be an integer >= 1", self.n_steps)
        if not self.t_max > 0:
            raise ValueError("t_max must be > 0", self.t_max)
        object.__setattr__(self, "n_steps", int(self.n_steps))
        object.__setattr__(self, "t_max", float(self.t_max))

    @property
    def dt(self) -> float:
        return self.t_max / self.n_steps

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.dt

    def index_of(self, t: float) -> int:
        k = int(round(t / self.dt))
        if k < 0 or k > self.n_steps or abs(k * self.dt - t) > 1e-9 * self.dt + 1e-15:
            raise ValueError("time is not a grid point", t)
        return k

    def refined(self, factor: int = 2) -> "TimeGrid":
        return TimeGrid(self.t_max, self.n_steps * factor)


@dataclass(frozen=True, eq=False)
class BoundaryPath:
    """
    A free boundary sampled on a TimeGrid.

    Invariants: values[0] == 0, non-decreasing, increments bounded by
    lipschitz_bound * dt.
    """
    grid: TimeGrid
    values: np.ndarray
    lipschitz_bound: float

    def __post_init__(self):
        values = readonly(self.values)
        object.__setattr__(self, "values", values)
        if values.shape != (self.grid.n_steps + 1, ):
            raise ValueError("boundary length does not match the grid",
                             values.shape, self.grid.n_steps + 1)
        if values[0] != 0.0:
            raise ValueError("boundary must start at 0", values[0])
        inc = np.diff(values)
        if np.any(inc < 0):
            raise ValueError("boundary must be non-decreasing")
        if np.any(inc > self.lipschitz_bound * self.grid.dt * (1 + 1e-10) + 1e-15):
            raise ValueError("boundary violates its Lipschitz bound",
                             inc.max() / self.grid.dt, self.lipschitz_bound)

    @classmethod
    def zero(cls, grid: TimeGrid) -> "BoundaryPath":
        return cls(grid, np.zeros(grid.n_steps + 1), 0.0)

    @classmethod
    def from_values(cls, grid: TimeGrid, values) -> "BoundaryPath":
        """ Lipschitz bound taken as the observed maximal slope """
        values = np.asarray(values, dtype=float)
        slope = float(np.max(np.diff(values), initial=0.0)) / grid.dt
        return cls(grid, values, slope)

    @property
    def slopes(self) -> np.ndarray:
        """ piecewise-constant Λ' on each grid step """
        return np.diff(self.values) / self.grid.dt

    def __call__(self, t):
        return np.interp(t, self.grid.times, self.values)

    def resample(self, grid: TimeGrid) -> "BoundaryPath":
        if grid.t_max != self.grid.t_max:
            raise ValueError("cannot resample onto a different horizon")
        values = np.maximum.accumulate(self(grid.times))
        values[0] = 0.0
        return BoundaryPath(grid, values, self.lipschitz_bound)

    def sup_distance(self, other: "BoundaryPath") -> float:
        return float(np.max(np.abs(self.values - other.values)))


class DensitySpec(object):
    """
    Initial temperature profile f, stored as piecewise-linear segments on
    breakpoints x_0 < ... < x_J: f(y) = f0[j] + slope[j] * (y - x_j) on
    [x_j, x_{j+1}), zero outside [x_0, x_J).
    """

    def __init__(self, kind: str, breakpoints, left_values, slopes, params: dict = None):
        self.kind = kind
        self.params = params or {}
        x = np.asarray(breakpoints, dtype=float)
        f0 = np.asarray(left_values, dtype=float)
        s = np.asarray(slopes, dtype=float)
        if x.ndim != 1 or len(x) < 2 or len(f0) != len(x) - 1 or len(s) != len(f0):
            raise ValueError("malformed density segments")
        if np.any(np.diff(x) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if x[0] < 0:
            raise ValueError("support must lie in [0, inf)", x[0])
        self.breakpoints = readonly(x)
        self.left_values = readonly(f0)
        self.slopes = readonly(s)
        lengths = np.diff(x)
        cells = f0 * lengths + 0.5 * s * lengths**2
        self._cum = readonly(np.concatenate([[0.0], np.cumsum(cells)]))

    @classmethod
    def uniform(cls, a: float, b: float) -> "DensitySpec":
        if not b > a:
            raise ValueError("uniform(a, b) needs b > a", a, b)
        return cls("uniform", [a, b], [1.0 / (b - a)], [0.0], dict(a=a, b=b))

    @classmethod
    def piecewise_constant(cls, breakpoints, heights) -> "DensitySpec":
        heights = np.asarray(heights, dtype=float)
        return cls("piecewise_constant", breakpoints, heights,
                   np.zeros_like(heights),
                   dict(breakpoints=list(map(float, breakpoints)),
                        heights=list(map(float, heights))))

    @classmethod
    def tabulated(cls, xs, fs) -> "DensitySpec":
        """ piecewise-linear interpolation of (x_k, f_k); mass is the trapezoid rule """
        xs = np.asarray(xs, dtype=float)
        fs = np.asarray(fs, dtype=float)
        if xs.shape != fs.shape:
            raise ValueError("x and f tables differ in length")
        return cls("tabulated", xs, fs[:-1], np.diff(fs) / np.diff(xs),
                   dict(x=list(map(float, xs)), f=list(map(float, fs))))

    def scaled(self, c: float) -> "DensitySpec":
        params = dict(self.params, scale=c * self.params.get("scale", 1.0))
        return DensitySpec(self.kind, self.breakpoints, c * self.left_values,
                           c * self.slopes, params)

    def __repr__(self):
        return "<DensitySpec %s %s>" % (self.kind, self.params)

    @property
    def node_values(self) -> np.ndarray:
        right = self.left_values + self.slopes * np.diff(self.breakpoints)
        return np.concatenate([self.left_values, right])

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.node_values)))

    @property
    def min_value(self) -> float:
        return float(min(0.0, np.min(self.node_values)))

    @property
    def mass(self) -> float:
        return float(self._cum[-1])

    @property
    def support_lower(self) -> float:
        return float(self.breakpoints[0])

    @property
    def support_upper(self) -> float:
        return float(self.breakpoints[-1])

    def _segment(self, y):
        idx = np.searchsorted(self.breakpoints, y, side='right') - 1
        inside = (idx >= 0) & (idx < len(self.left_values))
        return np.clip(idx, 0, len(self.left_values) - 1), inside

    def pdf(self, y):
        y = np.asarray(y, dtype=float)
        j, inside = self._segment(y)
        val = self.left_values[j] + self.slopes[j] * (y - self.breakpoints[j])
        return np.where(inside, val, 0.0)

    def cdf(self, y):
        y = np.asarray(y, dtype=float)
        j, inside = self._segment(y)
        d = y - self.breakpoints[j]
        val = self._cum[j] + self.left_values[j] * d + 0.5 * self.slopes[j] * d**2
        return np.where(inside, val, np.where(y < self.breakpoints[0], 0.0, self.mass))

    def ppf(self, u):
        """ inverse CDF; solves the segment quadratic in its cancellation-free form """
        u = np.clip(np.asarray(u, dtype=float), 0.0, self.mass)
        j = np.clip(np.searchsorted(self._cum, u, side='right') - 1, 0,
                    len(self.left_values) - 1)
        r = u - self._cum[j]
        f0 = self.left_values[j]
        s = self.slopes[j]
        root = np.sqrt(np.maximum(f0 * f0 + 2.0 * s * r, 0.0))
        den = f0 + root
        d = np.where(den > 0, 2.0 * r / np.where(den > 0, den, 1.0), 0.0)
        length = self.breakpoints[j + 1] - self.breakpoints[j]
        return self.breakpoints[j] + np.clip(d, 0.0, length)


@dataclass(frozen=True)
class ModelParams:
    alpha: float
    epsilon: float = 0.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("alpha must be > 0", self.alpha)
        if self.epsilon < 0:
            raise NonPositiveEpsilonError("epsilon must be >= 0", self.epsilon)

    @property
    def is_limit(self) -> bool:
        return self.epsilon == 0

    @property
    def boundary_cap(self) -> float:
        """ 2/α, the a-priori ceiling of every boundary """
        return 2.0 / self.alpha

    def with_epsilon(self, epsilon: float) -> "ModelParams":
        return dataclasses.replace(self, epsilon=epsilon)


def validate_model(f: DensitySpec, params: ModelParams) -> Tuple[DensitySpec, ModelParams]:
    """
    Raises:
        NegativeDensityError, NotNormalizedError, SupercriticalSupNormError
    """
    if f.min_value < 0:
        raise NegativeDensityError("f takes the value %g" % f.min_value)
    if abs(f.mass - 1.0) > MASS_TOLERANCE:
        raise NotNormalizedError("mass of f is %.17g" % f.mass)
    if not f.sup_norm < params.alpha / 2:
        raise SupercriticalSupNormError(
            "sup-norm %g >= alpha/2 = %g" % (f.sup_norm, params.alpha / 2))
    return f, params


class MollifiedDensity(object):
    """
    f_eps = f * rho_eps, evaluated in closed form from the kernel's partial
    moments. CDF and inverse CDF use a table over the support refined by one
    Newton step.
    """

    def __init__(self, base: DensitySpec, epsilon: float, table_size: int = CDF_TABLE_SIZE):
        self.base = base
        self.epsilon = float(epsilon)
        self._kernel = reference_kernel()
        self.kernel_support = self._kernel.support
        lo = base.support_lower
        hi = base.support_upper + self.epsilon * self.kernel_support
        self._x = readonly(np.linspace(lo, hi, table_size))
        self._cdf = readonly(np.maximum.accumulate(self.cdf(self._x)))
        self.sup_norm = self._find_sup()

    def __repr__(self):
        return "<MollifiedDensity eps=%g of %r>" % (self.epsilon, self.base)

    @property
    def support(self) -> Tuple[float, float]:
        return float(self._x[0]), float(self._x[-1])

    @property
    def support_upper(self) -> float:
        return float(self._x[-1])

    @property
    def mass(self) -> float:
        return float(self.cdf(self.support_upper + 1.0))

    def _moments(self, x):
        K = self._kernel.partial_moment
        xs = self.base.breakpoints
        eps = self.epsilon
        hi = (x - xs[None, :-1]) / eps
        lo = (x - xs[None, 1:]) / eps
        return [K(m, hi) - K(m, lo) for m in range(3)]

    def _chunked(self, fn, x):
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1)
        out = np.empty_like(flat)
        for start in range(0, len(flat), _EVAL_CHUNK):
            part = flat[start:start + _EVAL_CHUNK, None]
            out[start:start + _EVAL_CHUNK] = fn(part)
        return out.reshape(x.shape)

    def _density(self, x):
        b = self.base
        dK0, dK1, _ = self._moments(x)
        D = x - b.breakpoints[None, :-1]
        terms = (b.left_values + b.slopes * D) * dK0 - b.slopes * self.epsilon * dK1
        return terms.sum(axis=1)

    def _distribution(self, x):
        b = self.base
        eps = self.epsilon
        dK0, dK1, dK2 = self._moments(x)
        D = x - b.breakpoints[None, :-1]
        const = b._cum[:-1] + b.left_values * D + 0.5 * b.slopes * D**2
        terms = const * dK0 - eps * (b.left_values + b.slopes * D) * dK1 \
            + 0.5 * b.slopes * eps**2 * dK2
        above = b.mass * self._kernel.cdf((x[:, 0] - b.breakpoints[-1]) / eps)
        return terms.sum(axis=1) + above

    def evaluate(self, x):
        return self._chunked(self._density, x)

    def cdf(self, x):
        return self._chunked(self._distribution, x)

    def inverse_cdf(self, p):
        p = np.clip(np.asarray(p, dtype=float), 0.0, self._cdf[-1])
        x = np.interp(p, self._cdf, self._x)
        idx = np.clip(np.searchsorted(self._cdf, p, side='right') - 1, 0, len(self._x) - 2)
        d = self.evaluate(x)
        ok = d > 1e-300
        step = np.where(ok, (self.cdf(x) - p) / np.where(ok, d, 1.0), 0.0)
        return np.clip(x - step, self._x[idx], self._x[idx + 1])

    def _find_sup(self) -> float:
        vals = self.evaluate(self._x)
        best = float(vals.max())
        for i in np.argsort(vals)[-3:]:
            a = self._x[max(i - 1, 0)]
            b = self._x[min(i + 1, len(self._x) - 1)]
            if b <= a:
                continue
            res = optimize.minimize_scalar(lambda y: -float(self.evaluate(y)),
                                           bounds=(a, b), method='bounded',
                                           options=dict(xatol=1e-12))
            best = max(best, -float(res.fun))
        return min(best, self.base.sup_norm)


@require_positive_epsilon
def mollify(f: DensitySpec, epsilon: float) -> MollifiedDensity:
    """
    Raises:
        NonPositiveEpsilonError
    """
    fe = MollifiedDensity(f, epsilon)
    logger.debug("mollified %r: sup %.6g -> %.6g, support %s", f, f.sup_norm,
                 fe.sup_norm, fe.support)
    return fe


def sample_coupled_initial(f: DensitySpec, epsilon: float, u, v) -> Union[float, np.ndarray]:
    """
    X_0 + eps * Y with X_0 = F_f^{-1}(u) and Y = F_rho^{-1}(v); for fixed
    (u, v) the result is non-decreasing in eps.
    """
    u = np.clip(u, UNIFORM_CLAMP, 1.0 - UNIFORM_CLAMP)
    v = np.clip(v, UNIFORM_CLAMP, 1.0 - UNIFORM_CLAMP)
    x0 = f.ppf(u)
    if epsilon:
        x0 = x0 + epsilon * reference_kernel().ppf(v)
    if np.ndim(x0) == 0:
        return float(x0)
    return x0

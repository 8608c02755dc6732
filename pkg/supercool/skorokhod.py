# coding: utf-8
#
# Skorokhod map at zero for discretized paths. The regulator computed here is
# the only definition of local time used anywhere in the package:
#   l(t) = max(0, -min_{s <= t} y(s))

from dataclasses import dataclass

import numpy as np

from supercool.core import TimeGrid
from supercool.utils import readonly


@dataclass(frozen=True, eq=False)
class DiscretePath:
    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self):
        values = readonly(self.values)
        object.__setattr__(self, "values", values)
        if values.shape != (self.grid.n_steps + 1, ):
            raise ValueError("path length must be n_steps + 1", values.shape)


@dataclass(frozen=True, eq=False)
class ReflectedPath:
    reflected: DiscretePath
    regulator: DiscretePath


def running_regulator(running_min):
    """ max(0, -m) for an already accumulated minimum, along the last axis """
    return np.maximum(-np.asarray(running_min), 0.0) + 0.0


def regulator(y: DiscretePath) -> DiscretePath:
    return DiscretePath(y.grid, running_regulator(np.minimum.accumulate(y.values)))


def reflect(y: DiscretePath) -> ReflectedPath:
    reg = regulator(y)
    return ReflectedPath(DiscretePath(y.grid, y.values + reg.values), reg)


def bridge_minima(a, b, dt: float, w):
    """
    Minimum of a Brownian bridge of variance dt per step pinned at a and b,
    sampled by inversion from the uniform w in (0, 1]:

        m = ((a + b) - sqrt((b - a)^2 - 2 dt log w)) / 2

    w == 1 gives exactly min(a, b).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    logw = np.log(w)
    lower = np.minimum(a, b)
    m = 0.5 * ((a + b) - np.sqrt((b - a)**2 - 2.0 * dt * logw))
    return np.where(logw == 0.0, lower, np.minimum(m, lower))


def bridge_refined_regulator(y: DiscretePath, w) -> DiscretePath:
    """
    Regulator of y with the per-step conditional minima of the Brownian
    bridge folded into the running minimum. A linear drift inside a step
    drops out of the bridge law, so the formula applies to x0 + B - Λ with
    piecewise-linear Λ.

    Args:
        y: path sampled on its grid
        w: n_steps uniforms in (0, 1], one per step
    """
    w = np.asarray(w, dtype=float)
    if w.shape != (y.grid.n_steps, ):
        raise ValueError("need one uniform per step", w.shape)
    v = y.values
    mins = bridge_minima(v[:-1], v[1:], y.grid.dt, w)
    running = np.minimum.accumulate(np.concatenate([v[:1], mins]))
    return DiscretePath(y.grid, running_regulator(running))

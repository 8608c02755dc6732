# coding: utf-8
#
# Particle ensembles for the Feynman-Kac form of F_eps and for the hitting
# map of the limit problem.
#
# Every particle keeps its free position s_k = x0 + B(t_k) and the running
# minimum of y = s - Λ. Subtracting Λ last keeps y monotone in Λ exactly,
# which is what the comparison tests rely on.

import time
from collections import namedtuple
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional

import humanize
import numpy as np
from logzero import logger

from supercool.abcd import WindowEvaluator
from supercool.core import (BoundaryPath, DensitySpec, ModelParams, TimeGrid,
                            sample_coupled_initial)
from supercool.exceptions import GridMismatchError
from supercool.skorokhod import bridge_minima, running_regulator
from supercool.streams import ParticleStreams
from supercool.utils import readonly, require_positive_epsilon

Z_99 = 2.576
UNRELIABLE_EPSILON = 0.02
AUTO_BRIDGE_EPSILON = 0.1


class EnsembleConfig(namedtuple("EnsembleConfig",
                                ["n_particles", "seed", "bridge_refinement", "antithetic"])):
    """
    bridge_refinement: True, False, or None for automatic (on when eps <= 0.1)
    """
    __slots__ = ()

    def __new__(cls, n_particles: int, seed: int = 0, bridge_refinement: Optional[bool] = None,
                antithetic: bool = False):
        if int(n_particles) != n_particles or n_particles < 1:
            raise ValueError("n_particles must be an integer >= 1", n_particles)
        return super().__new__(cls, int(n_particles), int(seed), bridge_refinement,
                               bool(antithetic))

    def use_bridge(self, epsilon: float) -> bool:
        if self.bridge_refinement is None:
            return epsilon <= AUTO_BRIDGE_EPSILON
        return bool(self.bridge_refinement)

    def streams(self) -> ParticleStreams:
        return ParticleStreams(self.seed, self.n_particles, self.antithetic)


@dataclass(frozen=True, eq=False)
class LocalTimeEnsemble:
    grid: TimeGrid
    local_times: np.ndarray  # [particle, time]
    seed: int
    epsilon: float
    bridge_refinement: bool
    initial_positions: np.ndarray

    def __post_init__(self):
        lt = np.array(self.local_times, dtype=float)
        if lt.ndim != 2 or lt.shape[1] != self.grid.n_steps + 1:
            raise ValueError("local time matrix does not match the grid", lt.shape)
        lt.flags.writeable = False
        object.__setattr__(self, "local_times", lt)
        object.__setattr__(self, "initial_positions", readonly(self.initial_positions))

    @property
    def n_particles(self) -> int:
        return self.local_times.shape[0]

    @property
    def coupling(self) -> dict:
        return dict(seed=self.seed, uniforms_retained=False, epsilon=self.epsilon)


class ParticleBlock(namedtuple("ParticleBlock", ["index", "position", "running_min"])):
    """ free positions x0 + B(t_k) and running minima of x0 + B - Λ at the current step """
    __slots__ = ()


class Moments(namedtuple("Moments", ["count", "total", "m2"])):
    """
    Per-time sample count, sum and sum of squared deviations. Sums are merged
    in block order, so the mean is monotone in the samples.
    """
    __slots__ = ()

    @classmethod
    def of(cls, values: np.ndarray) -> "Moments":
        total = values.sum(axis=0)
        mean = total / values.shape[0]
        return cls(values.shape[0], total, ((values - mean)**2).sum(axis=0))

    @property
    def mean(self) -> np.ndarray:
        return self.total / self.count

    def merge(self, other: "Moments") -> "Moments":
        n = self.count + other.count
        delta = other.mean - self.mean
        m2 = self.m2 + other.m2 + delta**2 * (self.count * other.count / n)
        return Moments(n, self.total + other.total, m2)

    def std(self) -> np.ndarray:
        if self.count < 2:
            return np.zeros_like(self.mean)
        return np.sqrt(np.maximum(self.m2, 0.0) / (self.count - 1))


def _check_grid(lam: BoundaryPath, grid: Optional[TimeGrid]):
    if grid is not None and grid != lam.grid:
        raise GridMismatchError("boundary grid %s != ensemble grid %s" % (lam.grid, grid))


def _map_blocks(fn, items, workers: int) -> list:
    """ results come back in block order for any worker count """
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def start_block(streams: ParticleStreams, block: int, f: DensitySpec,
                epsilon: float) -> ParticleBlock:
    u, v = streams.initial_uniforms(block)
    x0 = sample_coupled_initial(f, epsilon, u, v)
    return ParticleBlock(block, x0, x0.copy())


def advance_block(streams: ParticleStreams, pb: ParticleBlock, lam: np.ndarray, dt: float,
                  k0: int, k1: int, bridge: bool):
    """
    Move a block from step k0 to k1.

    Args:
        lam: boundary values, indexable at k0..k1

    Returns:
        (ParticleBlock at k1, running minima of shape (particles, k1 - k0)
        holding steps k0+1..k1)
    """
    z, w = streams.normals(pb.index, k0, k1)
    steps = np.sqrt(dt) * z
    free = np.cumsum(np.concatenate([pb.position[:, None], steps], axis=1), axis=1)
    y = free - lam[None, k0:k1 + 1]
    if bridge:
        mins = bridge_minima(y[:, :-1], y[:, 1:], dt, w)
    else:
        mins = y[:, 1:]
    running = np.minimum.accumulate(
        np.concatenate([pb.running_min[:, None], mins], axis=1), axis=1)[:, 1:]
    # copies, so a stored state does not pin the whole window
    return ParticleBlock(pb.index, free[:, -1].copy(), running[:, -1].copy()), running


@require_positive_epsilon
def simulate_ensemble(f: DensitySpec, epsilon: float, lam: BoundaryPath, cfg: EnsembleConfig,
                      grid: TimeGrid = None, workers: int = 1) -> LocalTimeEnsemble:
    """
    Local times of x0 + B - Λ for every particle, x0 = X0 + eps*Y.

    Raises:
        GridMismatchError, NonPositiveEpsilonError
    """
    _check_grid(lam, grid)
    if epsilon < UNRELIABLE_EPSILON:
        logger.warning("eps=%g < %g: exp(-alpha L/eps) estimates are unreliable",
                       epsilon, UNRELIABLE_EPSILON)
    streams = cfg.streams()
    bridge = cfg.use_bridge(epsilon)
    n_steps = lam.grid.n_steps

    def work(block):
        pb = start_block(streams, block, f, epsilon)
        _, running = advance_block(streams, pb, lam.values, lam.grid.dt, 0, n_steps, bridge)
        running = np.concatenate([pb.running_min[:, None], running], axis=1)
        return pb.position, running_regulator(running)

    start = time.time()
    parts = _map_blocks(work, list(range(streams.n_blocks)), workers)
    logger.debug("simulated %d particles x %d steps in %s", cfg.n_particles, n_steps,
                 humanize.naturaldelta(time.time() - start))
    return LocalTimeEnsemble(lam.grid, np.concatenate([p[1] for p in parts]), cfg.seed,
                             float(epsilon), bridge, np.concatenate([p[0] for p in parts]))


def _survival(local_times, params: ModelParams):
    return np.exp(-params.alpha * np.asarray(local_times) / params.epsilon)


def _to_boundary(grid: TimeGrid, values) -> BoundaryPath:
    values = np.maximum.accumulate(np.asarray(values, dtype=float))
    values[0] = 0.0
    return BoundaryPath.from_values(grid, values)


@require_positive_epsilon
def evaluate_F_mc(ens: LocalTimeEnsemble, params: ModelParams) -> BoundaryPath:
    """ t_k -> (2/α)(1 - mean exp(-α L_k / eps)) """
    mean = _survival(ens.local_times, params).mean(axis=0)
    return _to_boundary(ens.grid, params.boundary_cap * (1.0 - mean))


def ci_halfwidth(ens: LocalTimeEnsemble, params: ModelParams, t: float) -> float:
    """ 99% normal-approximation half-width of the F_mc estimate at grid time t """
    k = ens.grid.index_of(t)
    e = _survival(ens.local_times[:, k], params)
    n = len(e)
    if n < 2 or np.all(e == e[0]):
        return 0.0
    return float(Z_99 * params.boundary_cap * e.std(ddof=1) / np.sqrt(n))


class HittingEstimate(namedtuple("HittingEstimate", ["boundary", "fraction", "stderr"])):
    __slots__ = ()


def hitting_fraction(f: DensitySpec, lam: BoundaryPath, params: ModelParams,
                     cfg: EnsembleConfig, grid: TimeGrid = None,
                     workers: int = 1) -> HittingEstimate:
    """
    Fraction of particles x0 + B - Λ (x0 ~ f, unmollified) whose bridge-refined
    running minimum reached 0 by each grid time, with binomial standard errors.
    """
    _check_grid(lam, grid)
    streams = cfg.streams()
    n_steps = lam.grid.n_steps

    def work(block):
        pb = start_block(streams, block, f, 0.0)
        _, running = advance_block(streams, pb, lam.values, lam.grid.dt, 0, n_steps, True)
        hits = np.count_nonzero(running <= 0.0, axis=0)
        return np.concatenate([[np.count_nonzero(pb.running_min <= 0.0)], hits])

    counts = np.zeros(n_steps + 1, dtype=np.int64)
    for c in _map_blocks(work, list(range(streams.n_blocks)), workers):
        counts += c
    frac = counts / cfg.n_particles
    stderr = np.sqrt(frac * (1.0 - frac) / cfg.n_particles)
    values = params.boundary_cap * frac
    return HittingEstimate(_to_boundary(lam.grid, values), frac, stderr)


def evaluate_hitting_map(f: DensitySpec, lam: BoundaryPath, params: ModelParams,
                         cfg: EnsembleConfig, grid: TimeGrid = None,
                         workers: int = 1) -> BoundaryPath:
    """
    t_k -> (2/α) P(τ <= t_k) for τ the first time x0 + B - Λ reaches 0.

    Raises:
        GridMismatchError
    """
    return hitting_fraction(f, lam, params, cfg, grid, workers).boundary


class FeynmanKacEstimate(namedtuple("FeynmanKacEstimate", ["boundary", "halfwidth", "n_particles"])):
    __slots__ = ()


class McWindowEvaluator(WindowEvaluator):
    """
    Streaming F_eps: particles advance window by window and only the per-time
    moments of exp(-α L / eps) are kept, never the local-time matrix.
    """

    def __init__(self, f: DensitySpec, params: ModelParams, grid: TimeGrid,
                 cfg: EnsembleConfig, workers: int = 1):
        super().__init__(params, grid)
        self.f = f
        self.cfg = cfg
        self.workers = workers
        self.streams = cfg.streams()
        self.bridge = cfg.use_bridge(params.epsilon)
        if params.epsilon < UNRELIABLE_EPSILON:
            logger.warning("eps=%g < %g: exp(-alpha L/eps) estimates are unreliable",
                           params.epsilon, UNRELIABLE_EPSILON)

    @property
    def name(self) -> str:
        return "mc"

    def initial_state(self) -> List[ParticleBlock]:
        eps = self.params.epsilon
        return _map_blocks(lambda b: start_block(self.streams, b, self.f, eps),
                           list(range(self.streams.n_blocks)), self.workers)

    def advance(self, state, lam, k0, k1):
        params = self.params
        dt = self.grid.dt

        def work(pb):
            pb, running = advance_block(self.streams, pb, lam, dt, k0, k1, self.bridge)
            return pb, Moments.of(_survival(running_regulator(running), params))

        results = _map_blocks(work, state, self.workers)
        total = results[0][1]
        for _, m in results[1:]:
            total = total.merge(m)
        values = params.boundary_cap * (1.0 - total.mean)
        errors = Z_99 * params.boundary_cap * total.std() / np.sqrt(total.count)
        return values, [pb for pb, _ in results], errors


@require_positive_epsilon
def feynman_kac_estimate(f: DensitySpec, lam: BoundaryPath, params: ModelParams,
                         cfg: EnsembleConfig, grid: TimeGrid = None,
                         workers: int = 1) -> FeynmanKacEstimate:
    """
    F_mc(Λ) and its 99% half-width profile in one streaming pass; agrees with
    evaluate_F_mc(simulate_ensemble(...)) up to summation order.
    """
    _check_grid(lam, grid)
    ev = McWindowEvaluator(f, params, lam.grid, cfg, workers)
    values, _, errors = ev.advance(ev.initial_state(), lam.values, 0, lam.grid.n_steps)
    values = np.concatenate([[0.0], values])
    errors = np.concatenate([[0.0], errors])
    return FeynmanKacEstimate(_to_boundary(lam.grid, values), readonly(errors), cfg.n_particles)

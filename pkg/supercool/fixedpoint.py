# coding: utf-8
#
# Fixed points of F_eps by windowed Picard iteration, and the monotone
# iteration of the hitting map for eps = 0.

import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Tuple

import humanize
import numpy as np
from logzero import logger

from supercool.abcd import WindowEvaluator
from supercool.core import (BoundaryPath, DensitySpec, ModelParams, MollifiedDensity,
                            TimeGrid, mollify, validate_model)
from supercool.exceptions import (NonPositiveEpsilonError, NotConvergedError,
                                  PreconditionFailedError, WindowStalledError)
from supercool.montecarlo import Z_99, EnsembleConfig, McWindowEvaluator, hitting_fraction
from supercool.pde import PdeWindowEvaluator, SpaceGrid, richardson_F_pde

EVALUATORS = ("pde", "mc")
DEFAULT_MAX_SWEEPS = 200


@dataclass(frozen=True)
class PicardConfig:
    """
    window_steps: initial window length in grid steps, None for
        max(1, round(eps^2 / (4 sup(f_eps)^2 dt)))
    error_estimate: run one Richardson step on the solved boundary (pde only)
    """
    evaluator: str = "pde"
    tol: float = 1e-4
    max_iter: int = 50
    window_steps: Optional[int] = None
    min_window_steps: int = 1
    error_estimate: bool = False

    def __post_init__(self):
        if self.evaluator not in EVALUATORS:
            raise ValueError("evaluator must be one of %s" % (EVALUATORS, ), self.evaluator)
        if not self.tol > 0:
            raise ValueError("tol must be > 0", self.tol)
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1", self.max_iter)
        if self.min_window_steps < 1:
            raise ValueError("min_window_steps must be >= 1", self.min_window_steps)
        if self.window_steps is not None and self.window_steps < self.min_window_steps:
            raise ValueError("window_steps must be >= min_window_steps", self.window_steps)


@dataclass(frozen=True, eq=False)
class SolveReport:
    boundary: BoundaryPath
    iterations_per_window: Tuple[int, ...]
    residual: float
    window_halvings: int
    evaluator_stats: dict
    epsilon: float
    windows: Tuple[Tuple[int, int], ...] = ()
    iterates: Tuple[BoundaryPath, ...] = field(default=(), repr=False)

    @property
    def evaluator(self) -> str:
        return self.evaluator_stats.get("evaluator", "")

    @property
    def error_estimate(self) -> float:
        """ CI half-width (mc, hitting) or scheme error (pde), 0 if unknown """
        s = self.evaluator_stats
        return float(s.get("max_ci_halfwidth") or s.get("scheme_error") or 0.0)


def auto_window_steps(f_eps: MollifiedDensity, epsilon: float, dt: float) -> int:
    return max(1, int(round(epsilon**2 / (4.0 * f_eps.sup_norm**2 * dt))))


def clamp_window(F: np.ndarray, start: float, lipschitz: float, cap: float,
                 dt: float) -> np.ndarray:
    """ project F onto non-decreasing paths from `start` with slope <= lipschitz, below cap """
    out = np.empty_like(F)
    prev = start
    step = lipschitz * dt
    for i, v in enumerate(F):
        prev = min(max(v, prev), prev + step, cap)
        out[i] = prev
    return out


def _build_evaluator(f: DensitySpec, f_eps: MollifiedDensity, params: ModelParams,
                     tgrid: TimeGrid, cfg: PicardConfig, ensemble_cfg: Optional[EnsembleConfig],
                     xgrid: Optional[SpaceGrid], workers: int) -> WindowEvaluator:
    if cfg.evaluator == "pde":
        if xgrid is None:
            raise PreconditionFailedError("pde evaluator needs a space grid")
        return PdeWindowEvaluator(f_eps, params, tgrid, xgrid)
    if ensemble_cfg is None:
        raise PreconditionFailedError("mc evaluator needs an ensemble config")
    return McWindowEvaluator(f, params, tgrid, ensemble_cfg, workers)


def solve_regularized(f: DensitySpec, params: ModelParams, tgrid: TimeGrid, cfg: PicardConfig,
                      ensemble_cfg: EnsembleConfig = None, xgrid: SpaceGrid = None,
                      workers: int = 1, progress: Callable[[int, int], None] = None) -> SolveReport:
    """
    Λ_eps = F_eps(Λ_eps) window by window. Each window starts from the constant
    extension of the converged prefix and stops once sup |F(Λ) - Λ| <= tol;
    the accepted Λ is the input of that last evaluation.

    Args:
        progress: called with (steps done, total steps) after each window

    Raises:
        ValidationError, PreconditionFailedError, WindowStalledError
    """
    validate_model(f, params)
    if params.is_limit:
        raise NonPositiveEpsilonError("solve_regularized needs eps > 0")
    eps = params.epsilon
    f_eps = mollify(f, eps)
    evaluator = _build_evaluator(f, f_eps, params, tgrid, cfg, ensemble_cfg, xgrid, workers)
    lipschitz = f_eps.sup_norm / eps
    cap = params.boundary_cap
    dt = tgrid.dt
    n_steps = tgrid.n_steps

    window = cfg.window_steps or auto_window_steps(f_eps, eps, dt)
    window = min(max(window, cfg.min_window_steps), n_steps)
    logger.info("solving eps=%g with %s evaluator, %d steps, window %d", eps, evaluator.name,
                n_steps, window)

    lam = np.zeros(n_steps + 1)
    state = evaluator.initial_state()
    k0 = 0
    iterations: List[int] = []
    windows: List[Tuple[int, int]] = []
    halvings = 0
    residual = 0.0
    worst_error = 0.0
    start = time.time()
    while k0 < n_steps:
        k1 = min(k0 + window, n_steps)
        lam[k0 + 1:k1 + 1] = lam[k0]
        for it in range(1, cfg.max_iter + 1):
            F, new_state, errors = evaluator.advance(state, lam, k0, k1)
            change = float(np.max(np.abs(F - lam[k0 + 1:k1 + 1])))
            logger.debug("window [%d, %d] iteration %d: change %.3g", k0, k1, it, change)
            if change <= cfg.tol:
                break
            lam[k0 + 1:k1 + 1] = clamp_window(F, lam[k0], lipschitz, cap, dt)
        else:
            if window <= cfg.min_window_steps:
                raise WindowStalledError("no contraction on [%d, %d] after %d iterations"
                                         % (k0, k1, cfg.max_iter))
            window = max(cfg.min_window_steps, window // 2)
            halvings += 1
            logger.warning("window [%d, %d] did not contract, halving to %d steps", k0, k1,
                           window)
            continue
        state = new_state
        residual = max(residual, change)
        worst_error = max(worst_error, float(np.max(errors, initial=0.0)))
        iterations.append(it)
        windows.append((k0, k1))
        k0 = k1
        if progress:
            progress(k0, n_steps)

    boundary = BoundaryPath(tgrid, lam, lipschitz)
    logger.info("eps=%g solved in %s: %d windows, residual %.3g, Λ(T)=%.6g", eps,
                humanize.naturaldelta(time.time() - start), len(windows), residual, lam[-1])
    stats = dict(evaluator=evaluator.name)
    if evaluator.name == "mc":
        stats.update(max_ci_halfwidth=worst_error, n_particles=ensemble_cfg.n_particles,
                     bridge_refinement=ensemble_cfg.use_bridge(eps))
    elif cfg.error_estimate:
        stats.update(scheme_error=richardson_F_pde(f_eps, boundary, params, xgrid).max_error)
    return SolveReport(boundary, tuple(iterations), residual, halvings, stats, eps,
                       tuple(windows))


def solve_limit(f: DensitySpec, params: ModelParams, tgrid: TimeGrid, cfg: EnsembleConfig,
                tol: float, max_sweeps: int = DEFAULT_MAX_SWEEPS, workers: int = 1,
                progress: Callable[[int, int], None] = None) -> SolveReport:
    """
    Monotone iteration Λ^0 = 0, Λ^{k+1} = (2/α) P(τ^{Λ^k} <= .) under common
    random numbers; f is used unmollified. Iterates are kept in the report.

    Raises:
        ValidationError, NotConvergedError
    """
    validate_model(f, params)
    params = params.with_epsilon(0.0)
    lam = BoundaryPath.zero(tgrid)
    iterates = [lam]
    start = time.time()
    for sweep in range(1, max_sweeps + 1):
        est = hitting_fraction(f, lam, params, cfg, workers=workers)
        # pointwise max keeps the sequence monotone through roundoff in the bridge minima
        values = np.maximum(est.boundary.values, lam.values)
        nxt = BoundaryPath.from_values(tgrid, values)
        change = lam.sup_distance(nxt)
        iterates.append(nxt)
        lam = nxt
        logger.debug("limit sweep %d: change %.3g, Λ(T)=%.6g", sweep, change, values[-1])
        if progress:
            progress(sweep, max_sweeps)
        if change <= tol:
            ci = float(Z_99 * params.boundary_cap * est.stderr.max())
            logger.info("limit problem converged after %d sweeps in %s, Λ(T)=%.6g", sweep,
                        humanize.naturaldelta(time.time() - start), values[-1])
            stats = dict(evaluator="hitting", max_ci_halfwidth=ci, n_particles=cfg.n_particles,
                         sweeps=sweep)
            return SolveReport(lam, (sweep, ), change, 0, stats, 0.0,
                               ((0, tgrid.n_steps), ), tuple(iterates))
    raise NotConvergedError("limit iteration did not settle in %d sweeps" % max_sweeps,
                            change)

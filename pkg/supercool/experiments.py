# coding: utf-8
#
# Sweeps over eps toward the limit problem, and the two-evaluator check of
# the Feynman-Kac identity.

from collections import namedtuple
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from logzero import logger

from supercool.core import BoundaryPath, DensitySpec, ModelParams, TimeGrid, mollify, validate_model
from supercool.exceptions import GridMismatchError, InvalidSweepError
from supercool.fixedpoint import (DEFAULT_MAX_SWEEPS, PicardConfig, SolveReport, solve_limit,
                                  solve_regularized)
from supercool.montecarlo import EnsembleConfig, McWindowEvaluator, feynman_kac_estimate
from supercool.pde import SpaceGrid, front_audit, richardson_F_pde, solve_robin_pde
from supercool.utils import nonincreasing_within

FK_ABSOLUTE_SLACK = 1e-9


class LimitConfig(namedtuple("LimitConfig", ["n_particles", "tol", "max_sweeps"])):
    __slots__ = ()

    def __new__(cls, n_particles: int = 500000, tol: float = 5e-4,
                max_sweeps: int = DEFAULT_MAX_SWEEPS):
        return super().__new__(cls, int(n_particles), float(tol), int(max_sweeps))


class Violation(namedtuple("Violation", ["epsilon", "next_epsilon", "t", "magnitude"])):
    """ Λ_epsilon(t) exceeds Λ_next_epsilon(t) by magnitude """
    __slots__ = ()


class FkGapReport(namedtuple("FkGapReport", [
        "epsilon", "gap", "gap_time", "ci_halfwidth", "scheme_error", "F_pde", "F_mc",
        "passed"])):
    __slots__ = ()

    @property
    def bound(self) -> float:
        return 3.0 * (float(np.max(self.ci_halfwidth)) + float(np.max(self.scheme_error)))


@dataclass(frozen=True, eq=False)
class SweepReport:
    epsilons: Tuple[float, ...]
    boundaries: Tuple[BoundaryPath, ...]
    limit: BoundaryPath
    sup_distances: Tuple[float, ...]
    monotonicity_violations: Tuple[Violation, ...]
    fk_gaps: Optional[Tuple[float, ...]]
    tol_mono: float
    max_ci_halfwidth: float
    solve_reports: Tuple[SolveReport, ...] = ()
    limit_report: Optional[SolveReport] = None
    front_kinetic: Optional[Tuple[float, ...]] = None

    def __post_init__(self):
        if len(self.boundaries) != len(self.epsilons):
            raise ValueError("one boundary per epsilon")
        if not _strictly_decreasing(self.epsilons):
            raise InvalidSweepError("epsilons must be strictly decreasing", self.epsilons)

    @property
    def grid(self) -> TimeGrid:
        return self.limit.grid

    def distances_nonincreasing(self) -> bool:
        return nonincreasing_within(self.sup_distances, self.tol_mono)


def _strictly_decreasing(values: Sequence[float]) -> bool:
    return all(b < a for a, b in zip(values, values[1:]))


def check_epsilons(epsilons: Sequence[float]) -> Tuple[float, ...]:
    eps = tuple(float(e) for e in epsilons)
    if not eps:
        raise InvalidSweepError("no epsilon given")
    if any(not e > 0 for e in eps):
        raise InvalidSweepError("epsilons must be > 0", eps)
    if not _strictly_decreasing(eps):
        raise InvalidSweepError("epsilons must be strictly decreasing", eps)
    return eps


def space_grid_for(f: DensitySpec, epsilon: float, dx: float, t_max: float,
                   x_max: Optional[float] = None) -> SpaceGrid:
    return SpaceGrid.for_density(mollify(f, epsilon), dx, t_max, x_max)


def ordering_violations(epsilons: Sequence[float], boundaries: Sequence[BoundaryPath],
                        tol_mono: float) -> List[Violation]:
    """ worst point per consecutive pair where Λ_{eps_i} > Λ_{eps_{i+1}} + tol_mono """
    out = []
    for (e0, b0), (e1, b1) in zip(zip(epsilons, boundaries),
                                  zip(epsilons[1:], boundaries[1:])):
        excess = b0.values - b1.values
        k = int(np.argmax(excess))
        if excess[k] > tol_mono:
            out.append(Violation(e0, e1, float(b0.grid.times[k]), float(excess[k])))
    return out


def fk_cross_validate(f: DensitySpec, alpha: float, epsilon: float, lam: BoundaryPath,
                      tgrid: TimeGrid, xgrid: SpaceGrid, ensemble_cfg: EnsembleConfig,
                      workers: int = 1) -> FkGapReport:
    """
    sup_t |F_pde(Λ) - F_mc(Λ)| against 3 (max CI half-width + max Richardson
    error); a 1e-9 absolute slack covers cases where both are at roundoff.
    F_mc always uses bridge-refined minima, whatever ensemble_cfg says; the
    bound has no term for grid-monitoring bias.
    """
    if lam.grid != tgrid:
        raise GridMismatchError("boundary grid %s != %s" % (lam.grid, tgrid))
    params = ModelParams(alpha, epsilon)
    f_eps = mollify(f, epsilon)
    rich = richardson_F_pde(f_eps, lam, params, xgrid)
    bridged = ensemble_cfg._replace(bridge_refinement=True)
    mc = feynman_kac_estimate(f, lam, params, bridged, grid=tgrid, workers=workers)
    diff = np.abs(rich.coarse - mc.boundary.values)
    k = int(np.argmax(diff))
    gap = float(diff[k])
    report = FkGapReport(epsilon, gap, float(tgrid.times[k]), mc.halfwidth, rich.error,
                         rich.coarse, mc.boundary.values, False)
    passed = gap <= report.bound + FK_ABSOLUTE_SLACK
    logger.info("fk eps=%g: gap %.3g at t=%g, bound %.3g -> %s", epsilon, gap,
                report.gap_time, report.bound, "pass" if passed else "FAIL")
    return report._replace(passed=passed)


def epsilon_sweep(f: DensitySpec, alpha: float, epsilons: Sequence[float], tgrid: TimeGrid,
                  picard_cfg: PicardConfig, ensemble_cfg: EnsembleConfig = None,
                  limit_cfg: LimitConfig = None, dx: float = None, x_max: float = None,
                  fk: bool = False, workers: int = 1, progress=None) -> SweepReport:
    """
    Solve Λ_eps for each eps (one seed for all of them), the limit problem
    once, and collect distances and ordering violations.

    Args:
        dx, x_max: space grid for the pde evaluator and the fk check
        fk: cross-check F_pde and F_mc at every solved Λ_eps
        progress: called with (solves done, total solves)

    Raises:
        InvalidSweepError, ValidationError, SolverError
    """
    eps = check_epsilons(epsilons)
    validate_model(f, ModelParams(alpha))
    limit_cfg = limit_cfg or LimitConfig()
    needs_x = picard_cfg.evaluator == "pde" or fk
    if needs_x and dx is None:
        raise InvalidSweepError("the pde evaluator needs dx")
    total = len(eps) + 1
    done = [0]

    def tick():
        done[0] += 1
        if progress:
            progress(done[0], total)

    def solve(e):
        xgrid = space_grid_for(f, e, dx, tgrid.t_max, x_max) if needs_x else None
        rep = solve_regularized(f, ModelParams(alpha, e), tgrid, picard_cfg, ensemble_cfg,
                                xgrid, workers=inner_workers)
        tick()
        return rep

    inner_workers = max(1, workers // len(eps))
    if workers > 1 and len(eps) > 1:
        with ThreadPoolExecutor(max_workers=min(workers, len(eps))) as pool:
            reports = list(pool.map(solve, eps))
    else:
        reports = [solve(e) for e in eps]

    seed = ensemble_cfg.seed if ensemble_cfg else 0
    limit_ens = EnsembleConfig(limit_cfg.n_particles, seed, True,
                               ensemble_cfg.antithetic if ensemble_cfg else False)
    limit_report = solve_limit(f, ModelParams(alpha), tgrid, limit_ens, limit_cfg.tol,
                               limit_cfg.max_sweeps, workers=workers)
    tick()

    boundaries = tuple(r.boundary for r in reports)
    limit = limit_report.boundary
    distances = tuple(float(np.max(np.abs(b.values - limit.values))) for b in boundaries)
    max_ci = max([r.error_estimate for r in reports if r.evaluator == "mc"] or [0.0])
    tol_mono = 2.0 * (picard_cfg.tol + max_ci)
    violations = ordering_violations(eps, boundaries, tol_mono)
    for v in violations:
        logger.warning("ordering violated between eps=%g and eps=%g at t=%g by %.3g",
                       v.epsilon, v.next_epsilon, v.t, v.magnitude)

    fk_gaps = None
    kinetic = None
    if fk:
        fk_gaps = []
        kinetic = []
        for e, b in zip(eps, boundaries):
            xgrid = space_grid_for(f, e, dx, tgrid.t_max, x_max)
            gap = fk_cross_validate(f, alpha, e, b, tgrid, xgrid, ensemble_cfg
                                    or EnsembleConfig(limit_cfg.n_particles, seed), workers)
            fk_gaps.append(gap.gap)
            params = ModelParams(alpha, e)
            field = solve_robin_pde(mollify(f, e), b, params, xgrid, keep_every=tgrid.n_steps)
            kinetic.append(front_audit(field, b, params).kinetic)
        fk_gaps = tuple(fk_gaps)
        kinetic = tuple(kinetic)

    for e, d in zip(eps, distances):
        logger.info("eps=%g: sup |Λ_eps - Λ| = %.6g", e, d)
    return SweepReport(eps, boundaries, limit, distances, tuple(violations), fk_gaps, tol_mono,
                       max_ci, tuple(reports), limit_report, kinetic)


class OrderingAudit(namedtuple("OrderingAudit", ["epsilon", "smaller_epsilon", "iterates",
                                                 "max_violation"])):
    """ iterates: pairs (Λ^n_eps, Λ^n_smaller) for n = 0..n_iter """
    __slots__ = ()


def iterate_ordering_audit(f: DensitySpec, alpha: float, epsilon: float, smaller_epsilon: float,
                           tgrid: TimeGrid, ensemble_cfg: EnsembleConfig,
                           n_iter: int = 5, workers: int = 1) -> OrderingAudit:
    """
    Run the whole-horizon iterates Λ^0 = 0, Λ^{n+1} = F_mc(Λ^n) for two eps
    under common random numbers and report max_n,t (Λ^n_eps - Λ^n_smaller)^+,
    which the pathwise comparison makes 0.
    """
    check_epsilons([epsilon, smaller_epsilon])
    validate_model(f, ModelParams(alpha))
    evals = [McWindowEvaluator(f, ModelParams(alpha, e), tgrid, ensemble_cfg, workers)
             for e in (epsilon, smaller_epsilon)]
    states = [ev.initial_state() for ev in evals]
    lams = [np.zeros(tgrid.n_steps + 1), np.zeros(tgrid.n_steps + 1)]
    pairs = [tuple(BoundaryPath.from_values(tgrid, v) for v in lams)]
    worst = 0.0
    for n in range(n_iter):
        nxt = []
        for ev, state, lam in zip(evals, states, lams):
            values, _, _ = ev.advance(state, lam, 0, tgrid.n_steps)
            nxt.append(np.concatenate([[0.0], np.maximum.accumulate(values)]))
        lams = nxt
        pairs.append(tuple(BoundaryPath.from_values(tgrid, v) for v in lams))
        worst = max(worst, float(np.max(lams[0] - lams[1])))
        logger.debug("ordering audit iterate %d: worst excess %.3g", n + 1, worst)
    return OrderingAudit(epsilon, smaller_epsilon, tuple(pairs), max(worst, 0.0))

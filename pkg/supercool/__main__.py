# coding: utf-8
#

from __future__ import absolute_import, print_function

import argparse
import logging
import os
import sys
import time

import humanize
import logzero
import progress.bar
from logzero import logger

from supercool.config import RunConfig, load_config
from supercool.core import BoundaryPath, ModelParams, mollify, validate_model
from supercool.exceptions import BaseError, OutputError
from supercool.experiments import (check_epsilons, epsilon_sweep, fk_cross_validate,
                                   space_grid_for)
from supercool.fixedpoint import solve_limit, solve_regularized
from supercool.report import (REPORT_NAME, column_name, emit_csv, emit_distances_csv,
                              emit_fk_csv, fk_report_dict, solve_report_dict,
                              sweep_report_dict, write_json, write_manifest, write_table)
from supercool.version import __version__


class _ProgressBar(progress.bar.Bar):
    message = "progress"
    suffix = '%(percent)d%% [%(eta_td)s, %(rate)s]'

    @property
    def rate(self):
        return "%s/it" % humanize.naturaldelta(self.avg) if self.index else "-"


class _Progress(object):
    """ callback(done, total) driving a bar on a tty, silent otherwise """

    def __init__(self, message: str):
        self._message = message
        self._bar = None
        self._tty = hasattr(sys.stderr, "isatty") and sys.stderr.isatty()

    def __call__(self, done: int, total: int):
        if not self._tty:
            return
        if self._bar is None:
            self._bar = _ProgressBar(self._message, max=total)
        self._bar.next(done - self._bar.index)

    def finish(self):
        if self._bar:
            self._bar.finish()


def _xgrid(cfg: RunConfig, epsilon: float):
    return space_grid_for(cfg.density, epsilon, cfg.dx, cfg.tgrid.t_max, cfg.x_max)


def _run_solve_regularized(cfg: RunConfig, workers: int):
    check_epsilons(sorted(cfg.epsilons, reverse=True))
    files, solves = [], []
    for eps in cfg.epsilons:
        params = ModelParams(cfg.alpha, eps)
        xgrid = _xgrid(cfg, eps) if cfg.picard.evaluator == "pde" else None
        bar = _Progress("eps=%g" % eps)
        rep = solve_regularized(cfg.density, params, cfg.tgrid, cfg.picard, cfg.ensemble, xgrid,
                                workers=workers, progress=bar)
        bar.finish()
        path = os.path.join(cfg.output_dir, "%s.csv" % column_name(eps))
        emit_csv(rep, path)
        files.append(path)
        solves.append(solve_report_dict(rep))
    return files, dict(solves=solves)


def _run_solve_limit(cfg: RunConfig, workers: int):
    bar = _Progress("limit")
    rep = solve_limit(cfg.density, ModelParams(cfg.alpha), cfg.tgrid,
                      cfg.ensemble._replace(n_particles=cfg.limit.n_particles,
                                            bridge_refinement=True), cfg.limit.tol,
                      cfg.limit.max_sweeps, workers=workers, progress=bar)
    bar.finish()
    path = os.path.join(cfg.output_dir, "lambda_limit.csv")
    emit_csv(rep, path)
    return [path], dict(limit=solve_report_dict(rep))


def _run_sweep(cfg: RunConfig, workers: int):
    bar = _Progress("sweep")
    rep = epsilon_sweep(cfg.density, cfg.alpha, cfg.epsilons, cfg.tgrid, cfg.picard,
                        cfg.ensemble, cfg.limit, dx=cfg.dx, x_max=cfg.x_max,
                        fk=cfg.fk_boundary == "solved", workers=workers, progress=bar)
    bar.finish()
    files = [os.path.join(cfg.output_dir, name) for name in ("boundaries.csv", "distances.csv")]
    emit_csv(rep, files[0])
    emit_distances_csv(rep, files[1])
    if rep.fk_gaps is not None:
        files.append(os.path.join(cfg.output_dir, "fk_gaps.csv"))
        write_table(files[-1], ["epsilon", "fk_gap"], zip(rep.epsilons, rep.fk_gaps))
    return files, dict(sweep=sweep_report_dict(rep))


def _run_fk_validate(cfg: RunConfig, workers: int):
    validate_model(cfg.density, ModelParams(cfg.alpha))
    gaps = []
    for eps in cfg.epsilons:
        params = ModelParams(cfg.alpha, eps)
        xgrid = _xgrid(cfg, eps)
        if cfg.fk_boundary == "solved":
            lam = solve_regularized(cfg.density, params, cfg.tgrid, cfg.picard, cfg.ensemble,
                                    xgrid, workers=workers).boundary
        else:
            lam = BoundaryPath.zero(cfg.tgrid)
        gaps.append(fk_cross_validate(cfg.density, cfg.alpha, eps, lam, cfg.tgrid, xgrid,
                                      cfg.ensemble, workers=workers))
    path = os.path.join(cfg.output_dir, "fk_gaps.csv")
    emit_fk_csv(gaps, path)
    return [path], dict(fk=[fk_report_dict(g) for g in gaps],
                        passed=all(g.passed for g in gaps))


_modes = {
    "solve_regularized": _run_solve_regularized,
    "solve_limit": _run_solve_limit,
    "sweep": _run_sweep,
    "fk_validate": _run_fk_validate,
}


def run(cfg: RunConfig, workers: int = 1) -> str:
    """
    Execute cfg.mode and write every artifact into cfg.output_dir.

    Returns:
        manifest path
    """
    try:
        os.makedirs(cfg.output_dir, exist_ok=True)
    except OSError as e:
        raise OutputError("cannot create output dir", cfg.output_dir, str(e))
    start = time.time()
    logger.info("mode %s, seed %d, %d workers", cfg.mode, cfg.seed, workers)
    files, body = _modes[cfg.mode](cfg, workers)
    body.update(mode=cfg.mode, seed=cfg.seed, config_sha256=cfg.digest,
                alpha=cfg.alpha, density=dict(cfg.density.params, kind=cfg.density.kind),
                t_max=cfg.tgrid.t_max, n_steps=cfg.tgrid.n_steps)
    report_path = os.path.join(cfg.output_dir, REPORT_NAME)
    write_json(report_path, body)
    manifest = write_manifest(cfg.output_dir, cfg.digest, cfg.seed, files + [report_path])
    logger.info("done in %s", humanize.naturaldelta(time.time() - start))
    return manifest


def cmd_run(args):
    cfg = load_config(args.config, output=args.output, seed=args.seed)
    run(cfg, workers=args.threads)


def cmd_check(args):
    cfg = load_config(args.config, output=args.output, seed=args.seed)
    validate_model(cfg.density, ModelParams(cfg.alpha))
    for eps in cfg.epsilons:
        f_eps = mollify(cfg.density, eps)
        logger.info("eps=%g: sup f_eps = %.6g, Lipschitz bound %.6g", eps, f_eps.sup_norm,
                    f_eps.sup_norm / eps)
    print("OK %s mode=%s sha256=%s" % (args.config, cfg.mode, cfg.digest))


_config_flags = [
    dict(args=['--config', '-c'], type=str, required=True, help='run configuration (yaml)'),
    dict(args=['--output', '-o'], type=str, help='output directory, overrides the config'),
    dict(args=['--seed'], type=int, help='random seed, overrides the config'),
]

_commands = [
    dict(action=cmd_run,
         command="run",
         help="solve, sweep or cross-validate as the config says",
         flags=_config_flags + [
             dict(args=['--threads', '-j'], type=int, default=1,
                  help='worker threads, never changes results'),
         ]),
    dict(action=cmd_check,
         command="check",
         help="parse and validate a config without solving",
         flags=_config_flags),
]


def main(argv=None) -> int:
    # yapf: disable
    parser = argparse.ArgumentParser(
        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    parser.add_argument("-d", "--debug", action="store_true",
                        help="show debug log")
    parser.add_argument("-v", "--version", action="version", version=__version__)

    subparser = parser.add_subparsers(dest='subparser')

    actions = {}
    for c in _commands:
        cmd_name = c['command']
        actions[cmd_name] = c['action']
        sp = subparser.add_parser(cmd_name, help=c.get('help'),
                                  formatter_class=argparse.ArgumentDefaultsHelpFormatter)
        for f in c.get('flags', []):
            args = f.get('args')
            kwargs = f.copy()
            kwargs.pop('args', None)
            sp.add_argument(*args, **kwargs)

    args = parser.parse_args(argv)
    logzero.loglevel(logging.DEBUG if args.debug else logging.INFO)
    if args.debug:
        logger.debug("args: %s", args)

    if not args.subparser:
        parser.print_help()
        return 0
    if getattr(args, "threads", 1) < 1:
        parser.error("--threads must be >= 1")

    try:
        actions[args.subparser](args)
    except BaseError as e:
        logger.error("%s", e)
        return e.exit_code
    return 0
    # yapf: enable


if __name__ == '__main__':
    sys.exit(main())

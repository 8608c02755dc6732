# coding: utf-8
#
# Artifacts: CSV tables, report.json and the run manifest. Floats are written
# with 17 significant digits so tables parse back bitwise.

import csv
import datetime
import hashlib
import json
import os
from typing import Iterable, List, Sequence, Union

import numpy as np
from logzero import logger

from supercool.exceptions import OutputError
from supercool.experiments import FkGapReport, SweepReport
from supercool.fixedpoint import SolveReport
from supercool.utils import format_float
from supercool.version import __report_format__, __version__

REPORT_NAME = "report.json"
MANIFEST_NAME = "manifest.json"


def column_name(epsilon: float) -> str:
    return "lambda_limit" if epsilon == 0 else "lambda_eps_%s" % format(epsilon, "g")


def write_table(path: str, header: Sequence[str], rows: Iterable[Sequence[float]]):
    """
    Raises:
        OutputError
    """
    try:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for row in rows:
                w.writerow([format_float(v) for v in row])
    except OSError as e:
        raise OutputError("cannot write", path, str(e))
    logger.info("wrote %s", path)


def read_table(path: str):
    """ (header, float matrix) of a table written by write_table """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]])


def emit_csv(report: Union[SolveReport, SweepReport], path: str):
    """
    One row per grid time: (t, Λ) for a SolveReport, (t, Λ_eps..., Λ_limit)
    for a SweepReport.
    """
    if isinstance(report, SweepReport):
        header = ["t"] + [column_name(e) for e in report.epsilons] + [column_name(0)]
        columns = [b.values for b in report.boundaries] + [report.limit.values]
        times = report.grid.times
    elif isinstance(report, SolveReport):
        header = ["t", column_name(report.epsilon)]
        columns = [report.boundary.values]
        times = report.boundary.grid.times
    else:
        raise TypeError("cannot tabulate %r" % type(report))
    write_table(path, header, zip(times, *columns))


def emit_distances_csv(report: SweepReport, path: str):
    write_table(path, ["epsilon", "sup_distance"], zip(report.epsilons, report.sup_distances))


def emit_fk_csv(gaps: Sequence[FkGapReport], path: str):
    write_table(path, ["epsilon", "fk_gap", "bound", "passed"],
                ((g.epsilon, g.gap, g.bound, float(g.passed)) for g in gaps))


def solve_report_dict(r: SolveReport) -> dict:
    return dict(
        epsilon=r.epsilon,
        boundary_at_t_max=float(r.boundary.values[-1]),
        lipschitz_bound=r.boundary.lipschitz_bound,
        iterations_per_window=list(r.iterations_per_window),
        windows=len(r.windows),
        residual=r.residual,
        window_halvings=r.window_halvings,
        evaluator_stats=r.evaluator_stats,
    )


def fk_report_dict(g: FkGapReport) -> dict:
    return dict(epsilon=g.epsilon, gap=g.gap, gap_time=g.gap_time,
                max_ci_halfwidth=float(np.max(g.ci_halfwidth)),
                max_scheme_error=float(np.max(g.scheme_error)), bound=g.bound,
                passed=bool(g.passed))


def sweep_report_dict(r: SweepReport) -> dict:
    return dict(
        epsilons=list(r.epsilons),
        sup_distances=list(r.sup_distances),
        distances_nonincreasing=r.distances_nonincreasing(),
        tol_mono=r.tol_mono,
        max_ci_halfwidth=r.max_ci_halfwidth,
        monotonicity_violations=[v._asdict() for v in r.monotonicity_violations],
        fk_gaps=list(r.fk_gaps) if r.fk_gaps is not None else None,
        front_kinetic_residuals=list(r.front_kinetic) if r.front_kinetic else None,
        solves=[solve_report_dict(s) for s in r.solve_reports],
        limit=solve_report_dict(r.limit_report) if r.limit_report else None,
    )


def write_json(path: str, data: dict):
    try:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(data, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as e:
        raise OutputError("cannot write", path, str(e))
    logger.info("wrote %s", path)


def sha256_file(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(output_dir: str, config_digest: str, seed: int, files: List[str]) -> str:
    """ the only artifact carrying a timestamp """
    path = os.path.join(output_dir, MANIFEST_NAME)
    data = dict(
        config_sha256=config_digest,
        seed=seed,
        version=__version__,
        report_format=__report_format__,
        created=datetime.datetime.now(datetime.timezone.utc).isoformat(),
        files={os.path.basename(f): sha256_file(f) for f in files},
    )
    write_json(path, data)
    return path

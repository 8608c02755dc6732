# coding: utf-8
#
# supercool: numerical solvers for the supercooled Stefan problem with
# kinetic undercooling, by Monte Carlo local times and by a Robin PDE.

from supercool.core import (BoundaryPath, DensitySpec, ModelParams, MollifiedDensity, TimeGrid,
                            mollify, sample_coupled_initial, validate_model)
from supercool.exceptions import *  # noqa: F401,F403
from supercool.experiments import (LimitConfig, SweepReport, epsilon_sweep, fk_cross_validate,
                                   iterate_ordering_audit)
from supercool.fixedpoint import PicardConfig, SolveReport, solve_limit, solve_regularized
from supercool.montecarlo import (EnsembleConfig, LocalTimeEnsemble, ci_halfwidth,
                                  evaluate_F_mc, evaluate_hitting_map, simulate_ensemble)
from supercool.pde import (DensityField, SpaceGrid, evaluate_F_pde, mass_identity_residual,
                           solve_robin_pde)
from supercool.skorokhod import (DiscretePath, ReflectedPath, bridge_refined_regulator, reflect,
                                 regulator)
from supercool.version import __version__

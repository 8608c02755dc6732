# coding: utf-8
#

import numpy as np
import pytest

from supercool.core import BoundaryPath, DensitySpec, ModelParams, TimeGrid, mollify
from supercool.exceptions import (CFLUnreasonableError, GridMismatchError,
                                  PreconditionLipschitzError)
from supercool.pde import (DensityField, PdeWindowEvaluator, RobinStepper, SpaceGrid,
                           dump_field_csv, evaluate_F_pde, front_audit, mass_identity_residual,
                           richardson_F_pde, solve_robin_pde, to_physical)
from supercool.report import read_table


@pytest.fixture
def unit_eps(unit_uniform):
    return mollify(unit_uniform, 0.5)


def coarse_grids(f_eps, t_max=1.0, n_steps=256, dx=2.0**-6, x_max=None):
    return TimeGrid(t_max, n_steps), SpaceGrid.for_density(f_eps, dx, t_max, x_max)


def test_space_grid():
    g = SpaceGrid(8.0, 8192)
    assert g.dx == 2.0**-10
    assert g.nodes[-1] == 8.0
    assert g.refined().n_cells == 16384
    with pytest.raises(ValueError):
        SpaceGrid(8.0, 1)


def test_space_grid_default_truncation(unit_eps):
    g = SpaceGrid.for_density(unit_eps, 0.01, 1.0)
    assert g.x_max >= unit_eps.support_upper + 6.0
    assert g.x_max == pytest.approx(g.n_cells * 0.01)


def test_banded_matrix_is_an_m_matrix():
    st = RobinStepper(SpaceGrid(1.0, 10), ModelParams(3.0, 0.5), 0.01)
    ab = st.banded(0.7)
    assert np.all(ab[0, 1:] < 0) and np.all(ab[2, :-1] < 0)
    diag = ab[1]
    # rows are diagonally dominant
    assert np.all(diag > 0)
    assert np.all(diag[1:-1] >= np.abs(ab[0, 2:]) + np.abs(ab[2, :-2]))
    with pytest.raises(CFLUnreasonableError):
        st.banded(-0.1)
    with pytest.raises(CFLUnreasonableError):
        RobinStepper(SpaceGrid(1.0, 10), ModelParams(3.0, 0.5), 0.01, robin_override=-1.0).banded(0)


def test_neumann_hook_conserves_mass(unit_eps):
    tgrid, xgrid = coarse_grids(unit_eps, t_max=0.25, n_steps=64, dx=2.0**-7, x_max=8.0)
    field = solve_robin_pde(unit_eps, BoundaryPath.zero(tgrid), ModelParams(3.0, 0.5), xgrid,
                            robin_override=0.0)
    assert field.mass[0] == pytest.approx(1.0, abs=1e-8)
    assert field.mass == pytest.approx(field.mass[0], abs=1e-10)
    F = BoundaryPath.zero(tgrid)
    residual = mass_identity_residual(field, F, ModelParams(3.0, 0.5))
    assert residual.max() <= abs(field.mass[0] - 1.0) + 1e-10


def test_far_support_keeps_boundary_cold(far_uniform):
    f_eps = mollify(far_uniform, 0.5)
    tgrid, xgrid = coarse_grids(f_eps, dx=2.0**-5)
    field = solve_robin_pde(f_eps, BoundaryPath.zero(tgrid), ModelParams(3.0, 0.5), xgrid)
    assert field.boundary_trace.max() <= 1e-12
    F = evaluate_F_pde(field, ModelParams(3.0, 0.5))
    assert F.values.max() <= 1e-12


def check_maximum_principle(rng, n_cases):
    for _ in range(n_cases):
        lo = rng.uniform(0.0, 1.0)
        width = rng.uniform(1.0, 3.0)
        f = DensitySpec.uniform(lo, lo + width)
        alpha = rng.uniform(2.2, 6.0) / width
        eps = rng.uniform(0.1, 1.0)
        f_eps = mollify(f, eps)
        lip = f_eps.sup_norm / eps
        tgrid = TimeGrid(0.5, 64)
        slopes = rng.uniform(0.0, 0.99 * lip, tgrid.n_steps)
        lam = BoundaryPath(tgrid, np.concatenate([[0.0], np.cumsum(slopes * tgrid.dt)]), lip)
        xgrid = SpaceGrid.for_density(f_eps, 2.0**-5, tgrid.t_max)
        field = solve_robin_pde(f_eps, lam, ModelParams(alpha, eps), xgrid)
        assert field.value_min >= -1e-12
        assert field.value_max <= f_eps.sup_norm + 1e-10
        assert field.values.min() >= -1e-12


def test_maximum_principle_on_random_inputs(rng):
    check_maximum_principle(rng, 8)


@pytest.mark.slow
def test_maximum_principle_on_many_inputs(rng):
    check_maximum_principle(rng, 50)


def test_lipschitz_precondition(unit_eps):
    tgrid, xgrid = coarse_grids(unit_eps)
    steep = unit_eps.sup_norm / 0.5 * 1.01
    lam = BoundaryPath(tgrid, steep * tgrid.times, steep)
    with pytest.raises(PreconditionLipschitzError):
        solve_robin_pde(unit_eps, lam, ModelParams(3.0, 0.5), xgrid)


def test_truncation_must_cover_support(unit_eps):
    tgrid = TimeGrid(1.0, 16)
    with pytest.raises(GridMismatchError):
        solve_robin_pde(unit_eps, BoundaryPath.zero(tgrid), ModelParams(3.0, 0.5),
                        SpaceGrid(1.2, 100))


def _field_with_trace(trace, sup=1.0, t_max=1.0):
    tgrid = TimeGrid(t_max, len(trace) - 1)
    xgrid = SpaceGrid(1.0, 4)
    return DensityField(tgrid, xgrid, np.zeros((1, 5)), [0], trace, np.ones(len(trace)), 0.0,
                        sup, sup)


def test_evaluate_F_pde_examples():
    params = ModelParams(3.0, 0.5)
    assert not evaluate_F_pde(_field_with_trace(np.zeros(11)), params).values.any()
    field = _field_with_trace(np.full(11, 0.3))
    F = evaluate_F_pde(field, params)
    assert F.values == pytest.approx(0.3 * field.tgrid.times / 0.5, rel=1e-12, abs=1e-15)
    assert F.lipschitz_bound == 1.0 / 0.5


def test_F_pde_monotone_and_lipschitz(unit_eps):
    params = ModelParams(3.0, 0.5)
    tgrid, xgrid = coarse_grids(unit_eps)
    field = solve_robin_pde(unit_eps, BoundaryPath.zero(tgrid), params, xgrid)
    F = evaluate_F_pde(field, params)
    assert np.all(np.diff(F.values) >= 0)
    assert F.slopes.max() <= unit_eps.sup_norm / 0.5 * (1 + 1e-10)
    assert mass_identity_residual(field, F, params)[0] == pytest.approx(0.0, abs=1e-6)


def test_mass_identity_improves_under_refinement(unit_eps):
    params = ModelParams(3.0, 0.5)
    residuals = []
    for n_steps, dx in ((128, 2.0**-5), (256, 2.0**-6)):
        tgrid, xgrid = coarse_grids(unit_eps, n_steps=n_steps, dx=dx, x_max=8.0)
        field = solve_robin_pde(unit_eps, BoundaryPath.zero(tgrid), params, xgrid,
                                keep_every=n_steps)
        residuals.append(mass_identity_residual(field, evaluate_F_pde(field, params),
                                                params).max())
    assert residuals[1] < residuals[0]
    assert residuals[1] < 2e-2


# p(1, 0) for f = U(0, 1), α = 3, eps = 0.5, Λ = 0, extrapolated from (2^-14, 2^-12)
ORIGIN_VALUE_AT_ONE = 0.070961


@pytest.mark.slow
def test_reference_grid_against_refinement(unit_eps):
    params = ModelParams(3.0, 0.5)
    lam = BoundaryPath.zero(TimeGrid(1.0, 4096))
    xgrid = SpaceGrid.for_density(unit_eps, 2.0**-10, 1.0, 8.0)
    runs = []
    for factor in (1, 2, 4):
        field = solve_robin_pde(unit_eps, lam.resample(lam.grid.refined(factor)), params,
                                xgrid.refined(factor), keep_every=4096 * factor)
        F = evaluate_F_pde(field, params)
        runs.append((field.boundary_trace[-1], F.values[-1],
                     mass_identity_residual(field, F, params).max()))
    (p, F1, residual), (p2, F2, residual2), (p4, F4, _) = runs

    assert abs(p - (2 * p4 - p2)) <= 2e-4
    assert abs(p - ORIGIN_VALUE_AT_ONE) <= 2e-4
    assert abs(F1 - (2 * F4 - F2)) <= 5e-4
    assert residual <= 1e-3
    assert residual2 < residual


def test_keep_every(unit_eps):
    tgrid, xgrid = coarse_grids(unit_eps, n_steps=10)
    field = solve_robin_pde(unit_eps, BoundaryPath.zero(tgrid), ModelParams(3.0, 0.5), xgrid,
                            keep_every=4)
    assert list(field.kept_steps) == [0, 4, 8, 10]
    assert field.values.shape == (4, xgrid.n_cells + 1)
    assert field.slice_at(0.4)[0] == field.boundary_trace[4]
    with pytest.raises(KeyError):
        field.slice_at(0.5)


def test_window_evaluator_restarts_exactly(unit_eps):
    params = ModelParams(3.0, 0.5)
    tgrid, xgrid = coarse_grids(unit_eps, n_steps=64)
    lam = BoundaryPath(tgrid, 0.3 * tgrid.times, 0.3)
    ev = PdeWindowEvaluator(unit_eps, params, tgrid, xgrid)
    whole, _, _ = ev.advance(ev.initial_state(), lam.values, 0, 64)
    first, state, _ = ev.advance(ev.initial_state(), lam.values, 0, 20)
    rest, _, _ = ev.advance(state, lam.values, 20, 64)
    assert np.array_equal(whole, np.concatenate([first, rest]))

    F = evaluate_F_pde(solve_robin_pde(unit_eps, lam, params, xgrid), params)
    assert whole == pytest.approx(F.values[1:], abs=1e-12)


def test_richardson_estimate(unit_eps):
    params = ModelParams(3.0, 0.5)
    tgrid, xgrid = coarse_grids(unit_eps, n_steps=64, dx=2.0**-5)
    est = richardson_F_pde(unit_eps, BoundaryPath.zero(tgrid), params, xgrid)
    assert est.coarse.shape == est.fine.shape == (65, )
    assert est.error[0] == 0.0
    assert est.max_error > 0
    assert est.extrapolated == pytest.approx(2 * est.fine - est.coarse)


def test_physical_coordinates(unit_eps):
    params = ModelParams(3.0, 0.5)
    tgrid, xgrid = coarse_grids(unit_eps, n_steps=32)
    lam = BoundaryPath(tgrid, 0.5 * tgrid.times, 0.5)
    field = solve_robin_pde(unit_eps, lam, params, xgrid, keep_every=16)
    phys = to_physical(field, lam)
    last = phys.values[-1]
    assert np.all(np.isnan(last[phys.x < 0.5 - 1e-12]))
    k = np.searchsorted(phys.x, 0.5)
    assert last[k] == pytest.approx(field.values[-1][0], abs=1e-9)


def test_front_audit_on_integrated_boundary(unit_eps):
    params = ModelParams(3.0, 0.5)
    tgrid, xgrid = coarse_grids(unit_eps, n_steps=32)
    field = solve_robin_pde(unit_eps, BoundaryPath.zero(tgrid), params, xgrid, keep_every=8)
    audit = front_audit(field, evaluate_F_pde(field, params), params)
    assert audit.kinetic == 0.0
    assert audit.slope_kinetic < 1e-9
    assert np.isfinite(audit.stefan)


def test_dump_field_csv(unit_eps, tmp_path):
    tgrid, xgrid = coarse_grids(unit_eps, n_steps=8, dx=0.25)
    field = solve_robin_pde(unit_eps, BoundaryPath.zero(tgrid), ModelParams(3.0, 0.5), xgrid,
                            keep_every=4)
    path = str(tmp_path / "field.csv")
    dump_field_csv(field, path)
    header, rows = read_table(path)
    assert header == ["t", "x", "p"]
    assert rows.shape == (3 * (xgrid.n_cells + 1), 3)
    assert np.array_equal(rows[:xgrid.n_cells + 1, 2], field.values[0])

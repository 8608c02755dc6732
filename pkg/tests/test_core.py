# coding: utf-8
#

import numpy as np
import pytest
from scipy import integrate, optimize

from supercool.core import (BoundaryPath, DensitySpec, ModelParams, TimeGrid, mollify,
                            sample_coupled_initial, validate_model)
from supercool.exceptions import (NegativeDensityError, NonPositiveEpsilonError,
                                  NotNormalizedError, SupercriticalSupNormError)
from supercool.kernel import bump, normalizing_constant, reference_kernel


def test_time_grid():
    g = TimeGrid(1.0, 4)
    assert g.dt == 0.25
    assert list(g.times) == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert g.index_of(0.75) == 3
    assert g.refined(2).n_steps == 8
    with pytest.raises(ValueError):
        TimeGrid(1.0, 0)
    with pytest.raises(ValueError):
        g.index_of(0.3)


def test_boundary_path_invariants():
    g = TimeGrid(1.0, 4)
    b = BoundaryPath(g, [0, 0.1, 0.2, 0.2, 0.3], 0.4)
    assert b(0.125) == pytest.approx(0.05)
    assert b.slopes == pytest.approx([0.4, 0.4, 0.0, 0.4])
    with pytest.raises(ValueError):
        BoundaryPath(g, [0.1, 0.1, 0.2, 0.2, 0.3], 1.0)  # Λ(0) != 0
    with pytest.raises(ValueError):
        BoundaryPath(g, [0, 0.2, 0.1, 0.2, 0.3], 1.0)  # decreasing
    with pytest.raises(ValueError):
        BoundaryPath(g, [0, 0.1, 0.2, 0.2, 0.3], 0.3)  # too steep
    with pytest.raises(ValueError):
        BoundaryPath(g, [0, 0.1, 0.2], 1.0)  # wrong length


def test_boundary_resample_is_exact_on_linear_pieces():
    g = TimeGrid(1.0, 4)
    b = BoundaryPath(g, [0, 0.1, 0.2, 0.2, 0.3], 0.4)
    fine = b.resample(g.refined(2))
    assert fine.values[::2] == pytest.approx(b.values, abs=1e-15)
    assert fine.values[1] == pytest.approx(0.05)
    assert fine.lipschitz_bound == 0.4


def test_density_kinds():
    u = DensitySpec.uniform(0.0, 2.0)
    assert u.mass == pytest.approx(1.0, abs=1e-15)
    assert u.sup_norm == 0.5
    assert u.support_upper == 2.0

    pc = DensitySpec.piecewise_constant([0.0, 1.0, 3.0], [0.6, 0.2])
    assert pc.mass == pytest.approx(1.0, abs=1e-15)
    assert pc.sup_norm == pytest.approx(0.6)
    assert pc.cdf(1.0) == pytest.approx(0.6)

    tri = DensitySpec.tabulated([0.0, 1.0, 2.0], [0.0, 1.0, 0.0])
    assert tri.mass == pytest.approx(1.0, abs=1e-15)
    assert tri.pdf(0.5) == pytest.approx(0.5)
    assert tri.cdf(1.0) == pytest.approx(0.5)

    for f in (u, pc, tri):
        p = np.linspace(0.01, 0.99, 41)
        assert f.cdf(f.ppf(p)) == pytest.approx(p, abs=1e-12)


def test_validate_model_examples():
    f = DensitySpec.uniform(0.0, 1.0)
    assert validate_model(f, ModelParams(3.0)) == (f, ModelParams(3.0))
    with pytest.raises(SupercriticalSupNormError) as e:
        validate_model(DensitySpec.uniform(0.0, 2.0), ModelParams(1.0))
    assert e.value.name == "SupercriticalSupNorm"
    with pytest.raises(NotNormalizedError):
        validate_model(f.scaled(0.9), ModelParams(3.0))
    with pytest.raises(NegativeDensityError):
        validate_model(DensitySpec.tabulated([0.0, 1.0, 2.0], [-0.5, 1.5, 0.0]),
                       ModelParams(10.0))


@pytest.mark.parametrize("width", [0.5, 0.8, 1.0, 1.5, 2.0, 4.0])
@pytest.mark.parametrize("alpha", [1.0, 2.5, 4.0])
def test_validate_model_family(width, alpha):
    f = DensitySpec.uniform(0.0, width)
    if 1.0 / width < alpha / 2:
        validate_model(f, ModelParams(alpha))
    else:
        with pytest.raises(SupercriticalSupNormError):
            validate_model(f, ModelParams(alpha))


def test_kernel_normalized():
    C = normalizing_constant()
    val, _ = integrate.quad(lambda s: C * float(bump(s)), 0.0, 1.0, epsabs=1e-14)
    assert val == pytest.approx(1.0, abs=1e-12)
    k = reference_kernel()
    assert k.cdf(1.0) == pytest.approx(1.0, abs=1e-14)
    assert k.cdf(0.0) == 0.0
    assert k.mean == pytest.approx(0.5, abs=1e-12)
    z = np.linspace(0.15, 0.85, 15)
    assert k.ppf(k.cdf(z)) == pytest.approx(z, abs=1e-9)


def test_kernel_median_matches_root_finding():
    C = normalizing_constant()

    def cdf(z):
        return integrate.quad(lambda s: C * float(bump(s)), 0.0, z, epsabs=1e-14)[0]

    median = optimize.brentq(lambda z: cdf(z) - 0.5, 0.01, 0.99, xtol=1e-12)
    assert reference_kernel().median == pytest.approx(median, abs=1e-9)


def test_mollify_rejects_non_positive_epsilon(unit_uniform):
    with pytest.raises(NonPositiveEpsilonError):
        mollify(unit_uniform, 0.0)
    with pytest.raises(NonPositiveEpsilonError):
        mollify(unit_uniform, -1.0)


def test_mollify_support_and_mass(far_uniform):
    fe = mollify(far_uniform, 0.5)
    assert fe.support == (10.0, 11.5)
    x = np.linspace(0.0, 20.0, 20001)
    vals = fe.evaluate(x)
    assert np.all(vals[x <= 10.0] == 0.0)
    assert np.all(vals[x >= 11.5] == 0.0)
    assert fe.mass == pytest.approx(1.0, abs=1e-10)
    assert integrate.trapezoid(vals, x) == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("f", [
    DensitySpec.uniform(0.0, 1.0),
    DensitySpec.piecewise_constant([0.0, 1.0, 3.0], [0.6, 0.2]),
    DensitySpec.tabulated([0.5, 1.0, 2.5], [0.0, 1.0, 0.0]),
])
@pytest.mark.parametrize("eps", [0.05, 0.25, 1.0])
def test_mollify_never_raises_sup_norm(f, eps):
    fe = mollify(f, eps)
    lo, hi = fe.support
    x = np.linspace(lo - 0.5, hi + 0.5, 10000)
    vals = fe.evaluate(x)
    assert vals.min() >= -1e-14
    assert vals.max() <= f.sup_norm + 1e-12
    assert fe.sup_norm <= f.sup_norm
    assert fe.sup_norm == pytest.approx(vals.max(), abs=1e-6)
    assert fe.mass == pytest.approx(1.0, abs=1e-10)


def test_mollified_value_matches_quadrature(unit_uniform):
    eps = 0.25
    fe = mollify(unit_uniform, eps)
    C = normalizing_constant()
    for x in (0.05, 0.1, 0.5, 1.1):
        oracle, _ = integrate.quad(
            lambda y: float(unit_uniform.pdf(x - y)) * C * float(bump(y / eps)) / eps,
            0.0, eps, epsabs=1e-12, epsrel=1e-10,
            points=[p for p in (x, x - 1.0) if 0.0 < p < eps] or None)
        assert float(fe.evaluate(x)) == pytest.approx(oracle, abs=1e-8)


def test_mollified_vanishes_at_origin(unit_uniform):
    fe = mollify(unit_uniform, 0.3)
    assert float(fe.evaluate(0.0)) == 0.0
    h = 1e-4
    assert float(fe.evaluate(h)) / h < 1e-6


def test_inverse_cdf_consistent(unit_uniform):
    fe = mollify(unit_uniform, 0.4)
    p = np.linspace(0.001, 0.999, 200)
    assert fe.cdf(fe.inverse_cdf(p)) == pytest.approx(p, abs=1e-8)


def test_sample_coupled_initial_examples(unit_uniform):
    assert sample_coupled_initial(unit_uniform, 0.0, 0.5, 0.3) == 0.5
    m = reference_kernel().median
    assert sample_coupled_initial(unit_uniform, 0.5, 0.25, 0.5) == pytest.approx(
        0.25 + 0.5 * m, abs=1e-12)
    assert m == pytest.approx(0.5, abs=1e-9)


def test_sample_coupled_initial_monotone_in_epsilon(rng):
    f = DensitySpec.piecewise_constant([0.0, 1.0, 3.0], [0.6, 0.2])
    u = rng.random(1000)
    v = rng.random(1000)
    e1 = rng.random(1000)
    e2 = e1 + rng.random(1000)
    lo = np.array([sample_coupled_initial(f, a, x, y) for a, x, y in zip(e1, u, v)])
    hi = np.array([sample_coupled_initial(f, b, x, y) for b, x, y in zip(e2, u, v)])
    assert np.all(hi >= lo)


def test_sample_coupled_initial_clamps(unit_uniform):
    x = sample_coupled_initial(unit_uniform, 0.1, np.array([0.0, 1.0]), np.array([0.0, 1.0]))
    assert np.all(np.isfinite(x))
    assert x[0] > 0.0

# coding: utf-8
#
# Reference mollifier: rho(z) = C exp(-1/(z(1-z))) on (0, 1), zero elsewhere.
# Its CDF and the partial moments int_0^z s^m rho(s) ds (m = 0, 1, 2) are
# tabulated once and interpolated with cubic Hermite splines whose slopes are
# the exact integrands, so the convolution formulas in core.py stay accurate
# far below the validation tolerances.

import numpy as np
from logzero import logger
from scipy import integrate
from scipy.interpolate import CubicHermiteSpline

from supercool.utils import cache_return

TABLE_SIZE = 4096
SUPPORT = 1.0  # rho_eps lives in (0, eps * SUPPORT)

_GAUSS_ORDER = 8


def bump(z):
    z = np.asarray(z, dtype=float)
    inside = (z > 0.0) & (z < 1.0)
    safe = np.where(inside, z, 0.5)
    return np.where(inside, np.exp(-1.0 / (safe * (1.0 - safe))), 0.0)


@cache_return
def normalizing_constant() -> float:
    val, _ = integrate.quad(lambda s: float(bump(s)), 0.0, 1.0,
                            epsabs=1e-15, epsrel=1e-13, limit=200)
    return 1.0 / val


class BumpKernel(object):
    def __init__(self, table_size: int = TABLE_SIZE):
        self.C = normalizing_constant()
        self.support = SUPPORT
        z = np.linspace(0.0, 1.0, table_size + 1)
        h = z[1] - z[0]

        nodes, weights = np.polynomial.legendre.leggauss(_GAUSS_ORDER)
        mid = 0.5 * (z[:-1] + z[1:])
        pts = mid[:, None] + 0.5 * h * nodes[None, :]
        dens = self.pdf(pts)

        tables = []
        for m in range(3):
            cells = (dens * pts**m) @ weights * (0.5 * h)
            tables.append(np.concatenate([[0.0], np.cumsum(cells)]))
        total = tables[0][-1]
        logger.debug("bump kernel: C=%.17g, table mass=%.17g", self.C, total)

        self._z = z
        self._tables = [t / total for t in tables]
        self._splines = [
            CubicHermiteSpline(z, t, self.pdf(z) * z**m / total)
            for m, t in enumerate(self._tables)
        ]
        self.mean = self._tables[1][-1]

    def pdf(self, z):
        return self.C * bump(z)

    def partial_moment(self, m: int, z):
        """ int_0^z s^m rho(s) ds, saturated outside [0, 1] """
        z = np.clip(np.asarray(z, dtype=float), 0.0, 1.0)
        return self._splines[m](z)

    def cdf(self, z):
        return self.partial_moment(0, z)

    def ppf(self, v):
        """
        Generalized inverse of the kernel CDF.

        Table lookup followed by two Newton steps kept inside the table cell.
        """
        v = np.clip(np.asarray(v, dtype=float), 0.0, 1.0)
        cdf_table = self._tables[0]
        z = np.interp(v, cdf_table, self._z)
        idx = np.clip(np.searchsorted(cdf_table, v, side='right') - 1, 0,
                      len(self._z) - 2)
        lo, hi = self._z[idx], self._z[idx + 1]
        for _ in range(2):
            d = self.pdf(z)
            ok = d > 1e-300
            step = np.where(ok, (self.cdf(z) - v) / np.where(ok, d, 1.0), 0.0)
            z = np.clip(z - step, lo, hi)
        return z

    @property
    def median(self) -> float:
        return float(self.ppf(0.5))


@cache_return
def reference_kernel() -> BumpKernel:
    return BumpKernel()

"""Parameter grids for the offset and variance bounds.

The mu grid is uniform on [-1/2, 1/2). The lambda grid (variance bound) and
gamma grid (Bennett bound) are geometric, covering the range in which the
respective optimal parameter can fall; both union-bound budgets default to
delta / (2 k_mu).
"""
import functools
import json
import math
from dataclasses import dataclass

import numpy as np

from .lossstats import mu_range, mu_upper
from .specfun import lambert_w0, lambert_w_minus1


def _frozen(values):
    arr = np.asarray(values, dtype=float)
    arr.setflags(write=False)
    return arr


def mu_grid(k=200):
    """``k`` points -1/2 + i/k, i = 0..k-1 (half-open, all below 1/2)."""
    if k < 2:
        raise ValueError("the mu grid needs at least 2 points")
    return _frozen(-0.5 + np.arange(k) / k)


def lambda_grid_size(n, delta1, c1=1.05):
    s = math.sqrt((n - 1) / math.log(1.0 / delta1) + 1.0)
    return max(1, math.ceil(math.log(0.5 * s + 0.5) / math.log(c1)))


def lambda_base(n, delta1):
    """Smallest relevant lambda: 2(n-1)/n / (sqrt((n-1)/ln(1/delta1) + 1) + 1)."""
    s = math.sqrt((n - 1) / math.log(1.0 / delta1) + 1.0)
    return 2.0 * (n - 1) / n / (s + 1.0)


@functools.lru_cache(maxsize=256)
def lambda_grid(n, delta1, c1=1.05):
    if n < 2:
        raise ValueError("the lambda grid needs n >= 2")
    if not 0.0 < delta1 < 1.0 or c1 <= 1.0:
        raise ValueError("need 0 < delta1 < 1 and c1 > 1")
    k = lambda_grid_size(n, delta1, c1)
    return _frozen(lambda_base(n, delta1) * c1 ** np.arange(k))


def variance_floor(n, c_range, delta1):
    """Smallest value the variance bound can take: 2 c^2 ln(1/delta1) / (n - 1)."""
    return 2.0 * c_range ** 2 * math.log(1.0 / delta1) / (n - 1)


def gamma_min(n, b, c_range, delta2):
    arg = (4.0 * b * b / (n * c_range ** 2) * math.log(1.0 / delta2) - 1.0) / math.e
    return (lambert_w0(arg) + 1.0) / b


def gamma_max(n, b, c_range, delta1):
    """Positive root of e^(gb) - gb (1 + b^2/V_min) - 1."""
    alpha = 1.0 / (1.0 + b * b / variance_floor(n, c_range, delta1))
    w = lambert_w_minus1(-alpha * math.exp(-alpha))
    return -(w + alpha) / b


@functools.lru_cache(maxsize=1024)
def gamma_grid(n, b, c_range, delta1, delta2, c2=1.05):
    if b <= 0 or c_range <= 0:
        raise ValueError("b and c_range must be positive")
    lo = gamma_min(n, b, c_range, delta2)
    hi = gamma_max(n, b, c_range, delta1)
    if hi <= lo:
        return _frozen([lo])
    k = max(1, math.ceil(math.log(hi / lo) / math.log(c2)))
    return _frozen(lo * c2 ** np.arange(k))


@dataclass(frozen=True)
class GridSet:
    mu_grid: np.ndarray
    lambda_grid: np.ndarray
    gamma_grid: np.ndarray
    c1: float
    c2: float
    delta1: float
    delta2: float

    @property
    def k_mu(self):
        return len(self.mu_grid)

    @property
    def k_lambda(self):
        return len(self.lambda_grid)

    @property
    def k_gamma(self):
        return len(self.gamma_grid)

    def to_dict(self):
        return {
            "mu_grid": [float(v) for v in self.mu_grid],
            "lambda_grid": [float(v) for v in self.lambda_grid],
            "gamma_grid": [float(v) for v in self.gamma_grid],
            "k_mu": self.k_mu,
            "k_lambda": self.k_lambda,
            "k_gamma": self.k_gamma,
            "c1": self.c1,
            "c2": self.c2,
            "delta1": self.delta1,
            "delta2": self.delta2,
        }

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=2)
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        return text


def offset_grids(n, delta, mu, k_mu=200, c1=1.05, c2=1.05, mus=None):
    """Grids for the offset-tandem bound at a given ``mu``.

    The Bennett loss bound is b = (1 - mu)^2 and the range c = K_mu, so the
    gamma grid changes with mu; the lambda grid does not.
    """
    mus = mu_grid(k_mu) if mus is None else mus
    delta1 = delta2 = delta / (2 * len(mus))
    return GridSet(
        mu_grid=mus,
        lambda_grid=lambda_grid(int(n), delta1, c1),
        gamma_grid=gamma_grid(int(n), mu_upper(mu), mu_range(mu), delta1, delta2, c2),
        c1=c1,
        c2=c2,
        delta1=delta1,
        delta2=delta2,
    )


def snap(value, grid):
    """Closest grid point to ``value``; ties go to the smaller point."""
    grid = np.asarray(grid)
    # grids are increasing, so argmin's first hit is the smaller point
    i = int(np.argmin(np.abs(grid - value)))
    return float(grid[i]), i

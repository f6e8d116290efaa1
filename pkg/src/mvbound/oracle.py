"""Oracle bounds on the majority-vote loss.

Every function here takes the Gibbs risk ``g`` (the rho-average of the
individual losses) and the tandem risk ``t`` (the rho^2-average of the
pairwise joint-error rates); all functions broadcast over numpy arrays.
The feasible region is g^2 <= t <= g.
"""
from typing import NamedTuple

import numpy as np


class OraclePoint(NamedTuple):
    g: float
    t: float

    def check(self, tol=1e-12):
        if not (0.0 <= self.g <= 1.0 and 0.0 <= self.t <= 1.0):
            raise ValueError(f"risks must lie in [0, 1], got g={self.g}, t={self.t}")
        if not (self.g ** 2 - tol <= self.t <= self.g + tol):
            raise ValueError(f"infeasible point: need g^2 <= t <= g, got g={self.g}, t={self.t}")
        return self


def _scalar_or_array(x):
    x = np.asarray(x, dtype=float)
    return float(x) if x.ndim == 0 else x


def oracle_fo(g, t=None):
    """First-order bound 2 g."""
    return _scalar_or_array(2.0 * np.asarray(g, dtype=float))


def oracle_tnd(g, t):
    """Second-order Markov (tandem) bound 4 t."""
    return _scalar_or_array(4.0 * np.asarray(t, dtype=float))


def oracle_cbound(g, t):
    """Chebyshev-Cantelli (C-bound) form (t - g^2) / (1/4 + t - g); needs g <= 1/2."""
    g = np.asarray(g, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(g > 0.5):
        raise ValueError("the C-bound requires g <= 1/2")
    denom = 0.25 + t - g
    if np.any(denom == 0.0):
        raise ZeroDivisionError("t - g = -1/4: C-bound denominator vanishes")
    quotient = (t - g * g) / denom
    # 2g + (t - g/2)(1 - 2g)/denom is the same value, exact on t = g/2 where
    # it meets the first-order bound; it is used wherever the bound is >= g,
    # the quotient (accurate near t = g^2) elsewhere
    offset = 2.0 * g + (t - 0.5 * g) * (1.0 - 2.0 * g) / denom
    return _scalar_or_array(np.where(quotient >= g, offset, quotient))


def oracle_mv_param(g, t, mu):
    """Parametric Chebyshev-Cantelli bound (t - 2 mu g + mu^2) / (1/2 - mu)^2."""
    mu = np.asarray(mu, dtype=float)
    if np.any(mu >= 0.5):
        raise ValueError("mu must be < 0.5")
    g = np.asarray(g, dtype=float)
    t = np.asarray(t, dtype=float)
    return _scalar_or_array((t - 2.0 * mu * g + mu * mu) / (0.5 - mu) ** 2)


def mu_star(g, t):
    """Offset minimising :func:`oracle_mv_param`: g - (t - g^2) / (1/2 - g)."""
    g = np.asarray(g, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(g >= 0.5):
        raise ValueError("mu_star requires g < 1/2")
    return _scalar_or_array(g - (t - g * g) / (0.5 - g))


def oracle_mv_offset(mu_tandem_expectation, mu):
    """Offset-tandem bound E_rho^2[L_mu] / (1/2 - mu)^2."""
    mu = np.asarray(mu, dtype=float)
    if np.any(mu >= 0.5):
        raise ValueError("mu must be < 0.5")
    return _scalar_or_array(np.asarray(mu_tandem_expectation, dtype=float) / (0.5 - mu) ** 2)


def mu_tandem_expectation(g, t, mu):
    """E_rho^2[L_mu] expressed through g and t: t - 2 mu g + mu^2."""
    return _scalar_or_array(np.asarray(t) - 2.0 * np.asarray(mu) * np.asarray(g) + np.asarray(mu) ** 2)


def feasible_grid(size=400):
    """Uniform size x size grid on [0, 1/2)^2 restricted to g^2 <= t <= g, t > 0.

    Returns flat arrays ``g, t``. Both axes use the step 1/(2 size), so the
    line t = g/2 is hit exactly at even g indices.
    """
    step = 0.5 / size
    axis = np.arange(size) * step
    G, T = np.meshgrid(axis, axis, indexing="ij")
    keep = (T > 0.0) & (T <= G) & (G * G <= T)
    return G[keep], T[keep]


def ratio_surface(size=400):
    """C-bound / tandem-bound ratio over the feasible grid.

    Returns ``(g, t, ratio)`` flat arrays. The ratio never exceeds one and
    equals one on the line t = g/2.
    """
    g, t = feasible_grid(size)
    return g, t, oracle_cbound(g, t) / oracle_tnd(g, t)


def write_surface_csv(path, columns, names):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(names) + "\n")
        for row in zip(*columns):
            fh.write(",".join(repr(float(v)) for v in row) + "\n")

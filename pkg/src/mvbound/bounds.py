"""High-probability bounds on Gibbs, tandem and majority-vote losses.

The scalar inequalities (PAC-Bayes-kl, PAC-Bayes-lambda, PAC-Bayes-Bennett,
PAC-Bayes-Bernstein and the empirical variance bound) are combined into the
four majority-vote bounds FO, TND, CmuTND and COTND. Every composite bound
returns a :class:`BoundReport` that lists the terms it was assembled from,
so the confidence budget can be audited.

Validation-set conventions: Gibbs quantities use n = min_h |S_h|, pairwise
quantities use m = min_{h,h'} |S_h & S_h'|.
"""
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .lossstats import mu_range, mu_upper
from .specfun import kl_inv_lower, kl_inv_upper, lambert_w0, phi_ratio

E_MINUS_2 = math.e - 2.0


def kl_divergence(rho, pi):
    """KL(rho || pi) over hypotheses; +inf when rho leaves the support of pi."""
    rho = np.asarray(rho, dtype=float)
    pi = np.asarray(pi, dtype=float)
    pos = rho > 0
    if np.any(pi[pos] <= 0):
        return math.inf
    return float(np.sum(rho[pos] * np.log(rho[pos] / pi[pos])))


@dataclass(frozen=True)
class Posterior:
    rho: np.ndarray
    pi: np.ndarray

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=float)
        pi = np.asarray(self.pi, dtype=float)
        for name, v in (("rho", rho), ("pi", pi)):
            if v.ndim != 1 or np.any(v < 0) or abs(v.sum() - 1.0) > 1e-9:
                raise ValueError(f"{name} must be a distribution on the hypotheses")
        if rho.shape != pi.shape:
            raise ValueError("rho and pi must have the same length")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "pi", pi)

    @classmethod
    def uniform(cls, n_hypotheses):
        u = np.full(n_hypotheses, 1.0 / n_hypotheses)
        return cls(u, u.copy())

    def with_rho(self, rho):
        return Posterior(rho, self.pi)

    @property
    def kl(self):
        return kl_divergence(self.rho, self.pi)

    def gibbs(self, stats):
        return float(self.rho @ stats.gibbs)

    def tandem(self, stats):
        return float(self.rho @ stats.tandem @ self.rho)


@dataclass
class BoundReport:
    """A bound value with the parameters and terms it was computed from.

    ``bound`` is clipped to [0, 1]; ``raw`` keeps the unclipped value.
    """

    name: str
    raw: float
    params: dict = field(default_factory=dict)
    kl_term: float = 0.0
    union_factor: int = 1
    terms: dict = field(default_factory=dict)

    @property
    def bound(self):
        return min(1.0, max(0.0, self.raw))

    def to_dict(self):
        return {
            "name": self.name,
            "bound": self.bound,
            "raw": self.raw,
            "params": {k: float(v) for k, v in self.params.items()},
            "kl_term": self.kl_term,
            "union_factor": self.union_factor,
            "terms": {k: float(v) for k, v in self.terms.items()},
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)


def _confidence_log(n, delta):
    return math.log(2.0 * math.sqrt(n) / delta)


def _check(n, delta):
    if n < 1:
        raise ValueError("sample size must be positive")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")


def pb_kl_upper(emp_loss, kl_rho_pi, n, delta, extra_log=0.0):
    """kl-inverse upper bound with budget (KL + ln(2 sqrt(n)/delta) + extra_log) / n."""
    _check(n, delta)
    budget = (kl_rho_pi + _confidence_log(n, delta) + extra_log) / n
    return kl_inv_upper(min(max(emp_loss, 0.0), 1.0), budget)


def pb_kl_lower(emp_loss, kl_rho_pi, n, delta, extra_log=0.0):
    _check(n, delta)
    budget = (kl_rho_pi + _confidence_log(n, delta) + extra_log) / n
    return kl_inv_lower(min(max(emp_loss, 0.0), 1.0), budget)


def pb_lambda_upper(emp_loss, kl_rho_pi, n, delta, lam, extra_log=0.0):
    """emp / (1 - lam/2) + (KL + ln(2 sqrt(n)/delta)) / (lam (1 - lam/2) n), lam in (0, 2)."""
    _check(n, delta)
    if not 0.0 < lam < 2.0:
        raise ValueError(f"lambda must lie in (0, 2), got {lam}")
    half = 1.0 - lam / 2.0
    return emp_loss / half + (kl_rho_pi + _confidence_log(n, delta) + extra_log) / (lam * half * n)


def pb_lambda_lower(emp_loss, kl_rho_pi, n, delta, gamma, extra_log=0.0):
    """(1 - gamma/2) emp - (KL + ln(2 sqrt(n)/delta)) / (gamma n); may be negative."""
    _check(n, delta)
    if gamma <= 0.0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    return (1.0 - gamma / 2.0) * emp_loss - (kl_rho_pi + _confidence_log(n, delta) + extra_log) / (gamma * n)


def bennett_coefficient(gamma, b):
    """phi(gamma b) / (gamma b^2), the factor in front of the variance."""
    return phi_ratio(gamma * b) * gamma


def pb_bennett(emp_loss, variance, kl_rho_pi, n, delta_term_log, gamma, b):
    """PAC-Bayes-Bennett: emp + phi(gb)/(g b^2) var + (KL + log term) / (g n).

    ``delta_term_log`` is the full confidence term, e.g. ln(1/delta) or a
    union-bounded version; callers pass 2 KL for pairwise losses.
    """
    if gamma <= 0.0 or b <= 0.0:
        raise ValueError("gamma and b must be positive")
    return emp_loss + bennett_coefficient(gamma, b) * variance + (kl_rho_pi + delta_term_log) / (gamma * n)


def pb_bernstein(emp_loss, variance, kl_rho_pi, n, delta_term_log, gamma, b):
    """PAC-Bayes-Bernstein with coefficient (e - 2) gamma; gamma in (0, 1/b]."""
    if not 0.0 < gamma <= 1.0 / b * (1.0 + 1e-12):
        raise ValueError(f"gamma must lie in (0, 1/b], got {gamma}")
    return emp_loss + E_MINUS_2 * gamma * variance + (kl_rho_pi + delta_term_log) / (gamma * n)


def variance_bound(emp_variance, kl_term_log, n, lam, c_range):
    """Upper bound on the expected variance of a loss with range ``c_range``.

    ``kl_term_log`` is the whole numerator KL + ln(1/delta); lam must lie in
    (0, 2(n-1)/n).
    """
    if n < 2:
        raise ValueError("the variance bound needs n >= 2")
    if not 0.0 < lam < 2.0 * (n - 1) / n:
        raise ValueError(f"lambda must lie in (0, 2(n-1)/n), got {lam}")
    shrink = 1.0 - lam * n / (2.0 * (n - 1))
    return emp_variance / shrink + c_range ** 2 * kl_term_log / (n * lam * shrink)


def fo_bound(stats, posterior, delta):
    """First-order bound 2 * kl^-1(E_rho[L_hat], (KL + ln(2 sqrt(n)/delta)) / n)."""
    g = posterior.gibbs(stats)
    kl = posterior.kl
    n = stats.n_min
    upper = pb_kl_upper(g, kl, n, delta)
    return BoundReport(
        name="FO",
        raw=2.0 * upper,
        kl_term=kl,
        terms={"gibbs_emp": g, "gibbs_upper": upper, "n": n},
    )


def tnd_bound(stats, posterior, delta):
    """Tandem bound 4 * kl^-1(E_rho2[T_hat], (2 KL + ln(2 sqrt(m)/delta)) / m)."""
    t = posterior.tandem(stats)
    kl = posterior.kl
    m = stats.m_min
    upper = pb_kl_upper(t, 2.0 * kl, m, delta)
    return BoundReport(
        name="TND",
        raw=4.0 * upper,
        kl_term=kl,
        terms={"tandem_emp": t, "tandem_upper": upper, "m": m},
    )


def tnd_lambda_bound(stats, posterior, delta, lam):
    """Tandem bound with the PAC-Bayes-lambda relaxation (used while optimising)."""
    t = posterior.tandem(stats)
    kl = posterior.kl
    upper = pb_lambda_upper(t, 2.0 * kl, stats.m_min, delta, lam)
    return BoundReport(
        name="TND-lambda",
        raw=4.0 * upper,
        params={"lambda": lam},
        kl_term=kl,
        terms={"tandem_emp": t, "tandem_upper": upper, "m": stats.m_min},
    )


def _mv_from_offset(upper_tandem, gibbs_side, mu):
    return (upper_tandem - 2.0 * mu * gibbs_side + mu * mu) / (0.5 - mu) ** 2


def cmu_tnd_bound(stats, posterior, delta, mu, lam, gamma, k_mu):
    """CmuTND bound with PAC-Bayes-lambda terms.

    The tandem term is bounded from above with parameter ``lam`` and budget
    ln(4 k sqrt(m)/delta). For mu >= 0 the Gibbs term enters with a minus
    sign and is bounded from below with parameter ``gamma``; for mu < 0 it
    enters with a plus sign, so it is bounded from above and ``gamma`` is
    used as the lambda in (0, 2) of that upper bound.
    """
    if mu >= 0.5:
        raise ValueError(f"mu must be < 0.5, got {mu}")
    t = posterior.tandem(stats)
    g = posterior.gibbs(stats)
    kl = posterior.kl
    n, m = stats.n_min, stats.m_min
    union = math.log(2.0 * k_mu)
    upper_t = pb_lambda_upper(t, 2.0 * kl, m, delta, lam, extra_log=union)
    if mu >= 0:
        gibbs_side = pb_lambda_lower(g, kl, n, delta, gamma, extra_log=union)
        side = "gibbs_lower"
    else:
        gibbs_side = pb_lambda_upper(g, kl, n, delta, gamma, extra_log=union)
        side = "gibbs_upper"
    return BoundReport(
        name="CmuTND-lambda",
        raw=_mv_from_offset(upper_t, gibbs_side, mu),
        params={"mu": mu, "lambda": lam, "gamma": gamma},
        kl_term=kl,
        union_factor=4 * k_mu,
        terms={"tandem_emp": t, "gibbs_emp": g, "tandem_upper": upper_t, side: gibbs_side, "n": n, "m": m},
    )


def cmu_tnd_bound_kl(stats, posterior, delta, mu, k_mu):
    """CmuTND bound with PAC-Bayes-kl inverses, used for the final report."""
    if mu >= 0.5:
        raise ValueError(f"mu must be < 0.5, got {mu}")
    t = posterior.tandem(stats)
    g = posterior.gibbs(stats)
    kl = posterior.kl
    n, m = stats.n_min, stats.m_min
    union = math.log(2.0 * k_mu)
    upper_t = pb_kl_upper(t, 2.0 * kl, m, delta, extra_log=union)
    if mu >= 0:
        gibbs_side = pb_kl_lower(g, kl, n, delta, extra_log=union)
        side = "gibbs_lower"
    else:
        gibbs_side = pb_kl_upper(g, kl, n, delta, extra_log=union)
        side = "gibbs_upper"
    return BoundReport(
        name="CmuTND",
        raw=_mv_from_offset(upper_t, gibbs_side, mu),
        params={"mu": mu},
        kl_term=kl,
        union_factor=4 * k_mu,
        terms={"tandem_emp": t, "gibbs_emp": g, "tandem_upper": upper_t, side: gibbs_side, "n": n, "m": m},
    )


def co_tnd_bound(stats, posterior, delta, mu, gamma, lam, k_report, mu_stats=None):
    """COTND bound: offset-tandem loss via PAC-Bayes-Bennett and the variance bound.

    Uses n = m_min, b = (1 - mu)^2 and range K_mu; the confidence term is
    ln(2 k / delta) with ``k_report`` the union-bound count.
    """
    if mu >= 0.5:
        raise ValueError(f"mu must be < 0.5, got {mu}")
    n = stats.m_min
    if not 0.0 < lam < 2.0 * (n - 1) / n:
        raise ValueError(f"lambda must lie in (0, 2(n-1)/n), got {lam}")
    if mu_stats is None:
        mu_stats = stats.mu_tandem(mu)
    rho = posterior.rho
    kl = posterior.kl
    loss = float(rho @ mu_stats.loss @ rho)
    var = float(rho @ mu_stats.variance @ rho)
    log_term = math.log(2.0 * k_report / delta)
    b = mu_upper(mu)
    c_range = mu_range(mu)
    var_upper = variance_bound(var, 2.0 * kl + log_term, n, lam, c_range)
    offset_upper = pb_bennett(loss, var_upper, 2.0 * kl, n, log_term, gamma, b)
    return BoundReport(
        name="COTND",
        raw=offset_upper / (0.5 - mu) ** 2,
        params={"mu": mu, "lambda": lam, "gamma": gamma},
        kl_term=kl,
        union_factor=2 * int(k_report),
        terms={
            "mu_tandem_emp": loss,
            "mu_variance_emp": var,
            "variance_upper": var_upper,
            "mu_tandem_upper": offset_upper,
            "bennett_coefficient": bennett_coefficient(gamma, b),
            "n": n,
            "K_mu": c_range,
            "b_mu": b,
        },
    )


def bennett_gamma_star(variance, kl_term_log, n, b):
    """Unconstrained minimiser of the Bennett bound in gamma (via Lambert W0)."""
    if variance <= 0.0:
        return math.inf
    arg = (b * b * kl_term_log / (n * variance) - 1.0) / math.e
    return (lambert_w0(arg) + 1.0) / b


def bernstein_gamma_star(variance, kl_term_log, n, b):
    """Minimiser of the Bernstein bound over gamma in (0, 1/b]."""
    if variance <= 0.0:
        return 1.0 / b
    return min(1.0 / b, math.sqrt(kl_term_log / (E_MINUS_2 * n * variance)))


def bennett_bernstein_surface(n, kl=5.0, delta=0.05, b=1.0, emp=None, var=None):
    """Ratio of optimised Bennett to optimised Bernstein bounds over (emp, var).

    Returns flat arrays ``emp, var, bennett, bernstein, ratio``.
    """
    emp = np.linspace(0.0, 1.0, 51) if emp is None else np.asarray(emp, dtype=float)
    var = np.linspace(0.005, 0.25, 50) if var is None else np.asarray(var, dtype=float)
    log_term = math.log(1.0 / delta)
    E, V = np.meshgrid(emp, var, indexing="ij")
    E, V = E.ravel(), V.ravel()
    ben = np.empty_like(E)
    ber = np.empty_like(E)
    for i, (e, v) in enumerate(zip(E, V)):
        gb = bennett_gamma_star(v, kl + log_term, n, b)
        gs = bernstein_gamma_star(v, kl + log_term, n, b)
        ben[i] = pb_bennett(e, v, kl, n, log_term, gb, b)
        ber[i] = pb_bernstein(e, v, kl, n, log_term, gs, b)
    return E, V, ben, ber, ben / ber

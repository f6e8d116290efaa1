"""Empirical loss statistics of a prediction table.

Single-hypothesis losses are measured on each validation set S_h, pairwise
quantities on the overlaps S_h & S_h'. Pairs include the diagonal (h, h).
"""
from dataclasses import dataclass

import numpy as np


def mu_range(mu):
    """Range of the mu-tandem loss: max(1 - mu, 1 - 2 mu)."""
    return max(1.0 - mu, 1.0 - 2.0 * mu)


def mu_upper(mu):
    """Upper end of the mu-tandem loss, (1 - mu)^2."""
    return (1.0 - mu) ** 2


@dataclass(frozen=True)
class MuTandemStats:
    mu: float
    loss: np.ndarray
    variance: np.ndarray
    K_mu: float
    b_mu: float


@dataclass(frozen=True)
class LossStats:
    gibbs: np.ndarray
    tandem: np.ndarray
    overlap: np.ndarray
    n_min: int
    m_min: int
    errors: np.ndarray
    mask: np.ndarray

    @property
    def n_hypotheses(self):
        return self.gibbs.shape[0]

    def mu_tandem(self, mu):
        return _mu_tandem(self.errors, self.mask, self.overlap, mu)

    def to_csv(self, path):
        """Dump the Gibbs losses and the tandem matrix (row h: gibbs, tandem[h, :])."""
        H = self.n_hypotheses
        header = "hypothesis,gibbs," + ",".join(f"tandem_{j}" for j in range(H))
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(header + "\n")
            for h in range(H):
                cells = [str(h), repr(float(self.gibbs[h]))] + [repr(float(v)) for v in self.tandem[h]]
                fh.write(",".join(cells) + "\n")


def _error_matrices(table):
    mask = table.oob_mask.astype(float)
    errors = table.errors().astype(float)
    return errors, mask


def gibbs_losses(table):
    """Validation loss of every hypothesis, shape (H,)."""
    errors, mask = _error_matrices(table)
    sizes = mask.sum(axis=1)
    if np.any(sizes == 0):
        raise ValueError(f"hypothesis {int(np.argmin(sizes))} has an empty validation set")
    return errors.sum(axis=1) / sizes


def _overlaps(mask):
    overlap = np.rint(mask @ mask.T).astype(np.int64)
    return overlap


def _check_overlap(overlap, minimum, what):
    bad = np.argwhere(overlap < minimum)
    if bad.size:
        h, g = bad[0]
        raise ValueError(f"validation sets of hypotheses {h} and {g} overlap in fewer than {minimum} point(s) ({what})")


def tandem_losses(table):
    """Tandem losses on the pairwise overlaps and the overlap sizes."""
    errors, mask = _error_matrices(table)
    overlap = _overlaps(mask)
    _check_overlap(overlap, 1, "tandem loss")
    both = errors @ errors.T
    tandem = both / overlap
    return tandem, overlap


def loss_stats(table):
    """All first- and second-order statistics of ``table``."""
    errors, mask = _error_matrices(table)
    gibbs = gibbs_losses(table)
    tandem, overlap = tandem_losses(table)
    return LossStats(
        gibbs=gibbs,
        tandem=tandem,
        overlap=overlap,
        n_min=int(mask.sum(axis=1).min()),
        m_min=int(overlap.min()),
        errors=errors,
        mask=mask,
    )


def _mu_tandem(errors, mask, overlap, mu):
    if mu >= 0.5:
        raise ValueError(f"mu must be < 0.5, got {mu}")
    _check_overlap(overlap, 2, "mu-tandem variance")
    # on an overlap each point falls in one of three cells:
    # both err, exactly one errs, neither errs
    both = errors @ errors.T
    err_h = errors @ mask.T
    one = err_h + err_h.T - 2.0 * both
    none = overlap - (err_h + err_h.T) + both
    v_both = (1.0 - mu) ** 2
    v_one = -mu * (1.0 - mu)
    v_none = mu * mu
    n = overlap.astype(float)
    loss = (both / n) * v_both + (one / n) * v_one + (none / n) * v_none
    var = (both * (v_both - loss) ** 2 + one * (v_one - loss) ** 2 + none * (v_none - loss) ** 2) / (n - 1.0)
    return MuTandemStats(mu=float(mu), loss=loss, variance=var, K_mu=mu_range(mu), b_mu=mu_upper(mu))


def mu_tandem_stats(table, mu):
    """mu-tandem losses and their unbiased empirical variances on the overlaps."""
    errors, mask = _error_matrices(table)
    return _mu_tandem(errors, mask, _overlaps(mask), mu)


def second_moment_identity_check(table, rho):
    """Both sides of E[(E_rho[err])^2] = E_rho^2[tandem] on a common index set.

    The common set is the points that lie in every validation set.
    """
    rho = np.asarray(rho, dtype=float)
    common = table.oob_mask.all(axis=0)
    if not common.any():
        raise ValueError("no point is evaluated by every hypothesis")
    err = (table.predictions[:, common] != table.truth[None, common]).astype(float)
    n = err.shape[1]
    weighted = rho @ err
    lhs = float(np.mean(weighted ** 2))
    rhs = float(rho @ ((err @ err.T) / n) @ rho)
    return lhs, rhs

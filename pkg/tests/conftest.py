import contextlib
import time

import numpy as np
import pytest

from mvbound.dataio import NOT_EVALUATED, PredictionTable
from mvbound.lossstats import loss_stats


def random_table(rng, H, N, n_classes=2, oob_prob=0.5, error_rate=0.3, min_overlap=2):
    """Random table whose pairwise validation overlaps all hold >= min_overlap points."""
    truth = rng.integers(n_classes, size=N)
    while True:
        mask = rng.random((H, N)) < oob_prob
        both = mask.astype(int) @ mask.T.astype(int)
        if both.min() >= min_overlap:
            break
    wrong = rng.random((H, N)) < error_rate
    shift = rng.integers(1, n_classes, size=(H, N)) if n_classes > 2 else 1
    preds = np.where(wrong, (truth[None, :] + shift) % n_classes, truth[None, :])
    preds = np.where(mask, preds, NOT_EVALUATED)
    return PredictionTable(preds, truth, mask, n_classes)


def table_from_errors(errors, mask=None):
    """Binary table from an H x N error indicator matrix (truth all zeros)."""
    errors = np.asarray(errors, dtype=bool)
    mask = np.ones_like(errors) if mask is None else np.asarray(mask, dtype=bool)
    preds = np.where(mask, errors.astype(int), NOT_EVALUATED)
    return PredictionTable(preds, np.zeros(errors.shape[1], dtype=int), mask, 2)


def two_hypothesis_stats(rng, N=400):
    """Stats of a random 2-hypothesis full table with distinct error rates."""
    rates = rng.uniform(0.05, 0.45, size=2)
    corr = rng.uniform(0.0, 1.0)
    shared = rng.random(N)
    own = rng.random((2, N))
    u = np.where(rng.random((2, N)) < corr, shared[None, :], own)
    errors = u < rates[:, None]
    return loss_stats(table_from_errors(errors))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def exhaustive_two_point_profile(stats, delta, mus, union_log, step=1e-4):
    """Joint minimum over (rho, lambda, gamma, mu) of the CmuTND lambda form, H = 2.

    rho = (r, 1 - r) is scanned on a grid of spacing ``step``; lambda and gamma
    enter through their exact minimisers and mu through the finite grid.
    Returns (best value, best r).
    """
    r = np.linspace(0.0, 1.0, int(round(1 / step)) + 1)
    rho = np.stack([r, 1 - r], axis=1)
    n, m = stats.n_min, stats.m_min
    t = np.einsum("ki,ij,kj->k", rho, stats.tandem, rho)
    g = rho @ stats.gibbs
    with np.errstate(divide="ignore", invalid="ignore"):
        kl = np.where(rho > 0, rho * np.log(rho / 0.5), 0.0).sum(axis=1)
    tandem_budget = 2 * kl + np.log(2 * np.sqrt(m) / delta) + union_log
    gibbs_budget = kl + np.log(2 * np.sqrt(n) / delta) + union_log

    def upper(emp, budget, size):
        # min over lambda in (0, 2) of emp/(1 - lam/2) + budget/(lam (1 - lam/2) size)
        lam = 2 / (np.sqrt(2 * size * emp / budget + 1) + 1)
        return emp / (1 - lam / 2) + budget / (lam * (1 - lam / 2) * size)

    U_T = upper(t, tandem_budget, m)
    U_G = upper(g, gibbs_budget, n)
    # max over gamma > 0 of (1 - gamma/2) g - budget/(gamma n), gamma <= 2
    gam = np.minimum(np.sqrt(2 * gibbs_budget / (n * np.maximum(g, 1e-300))), 2.0)
    L_G = (1 - gam / 2) * g - gibbs_budget / (gam * n)
    mus = np.asarray(mus, dtype=float)[None, :]
    side = np.where(mus >= 0, L_G[:, None], U_G[:, None])
    values = ((U_T[:, None] - 2 * mus * side + mus ** 2) / (0.5 - mus) ** 2).min(axis=1)
    i = int(np.argmin(values))
    return float(values[i]), float(r[i])


ACCEPTANCE = {}


@contextlib.contextmanager
def criterion(number, title):
    """Record PASS/FAIL (with runtime) for an acceptance criterion; exceptions propagate."""
    start = time.perf_counter()
    try:
        yield
    except BaseException as exc:
        ACCEPTANCE[number] = f"FAIL  {title} ({time.perf_counter() - start:.1f}s): {type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"
        raise
    ACCEPTANCE[number] = f"PASS  {title} ({time.perf_counter() - start:.1f}s)"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {number:2d}: {ACCEPTANCE[number]}")

import json
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mvbound.grids import (
    GridSet,
    gamma_grid,
    gamma_max,
    gamma_min,
    lambda_base,
    lambda_grid,
    lambda_grid_size,
    mu_grid,
    offset_grids,
    snap,
    variance_floor,
)
from mvbound.lossstats import mu_range, mu_upper


def test_mu_grid_examples():
    np.testing.assert_array_equal(mu_grid(2), [-0.5, 0.0])
    g = mu_grid(200)
    assert g[0] == -0.5
    assert g[-1] == pytest.approx(0.495, abs=1e-15)
    np.testing.assert_allclose(np.diff(g), 0.005, atol=1e-15)
    assert np.all(g < 0.5)
    with pytest.raises(ValueError):
        mu_grid(1)


def _mp_k_lambda(n, delta1, c1):
    mp.mp.dps = 40
    s = mp.sqrt((n - 1) / mp.log(1 / mp.mpf(delta1)) + 1)
    return int(mp.ceil(mp.log(s / 2 + mp.mpf(1) / 2) / mp.log(mp.mpf(c1))))


def test_lambda_grid_size_known_value():
    assert lambda_grid_size(1000, 0.025, 1.05) == 45
    assert len(lambda_grid(1000, 0.025, 1.05)) == 45


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 10 ** 6), st.floats(1e-8, 0.5), st.floats(1.01, 2.0))
def test_lambda_grid_size_matches_high_precision(n, delta1, c1):
    assert lambda_grid_size(n, delta1, c1) == max(1, _mp_k_lambda(n, delta1, c1))


def test_lambda_grid_base_and_range():
    n, d1 = 1000, 0.025
    g = lambda_grid(n, d1)
    assert g[0] == lambda_base(n, d1)
    assert np.all(np.diff(g) > 0)
    assert np.all(g < 2 * (n - 1) / n)
    assert g[-1] < (n - 1) / n
    assert g[-1] * 1.05 >= (n - 1) / n


def test_lambda_base_is_optimal_lambda_at_maximal_variance():
    # closed-form lambda* with empirical variance K^2/2 and KL = 0
    n, d1, K = 800, 0.01, 1.7
    V = K * K / 2
    lam = 2 * (n - 1) / n / (math.sqrt(2 * (n - 1) * V / (K * K * math.log(1 / d1)) + 1) + 1)
    assert lam == pytest.approx(lambda_base(n, d1), rel=1e-14)


def _H(gamma, b, c, n, delta1):
    vmin = variance_floor(n, c, delta1)
    return math.exp(gamma * b) - gamma * b * (1 + b * b / vmin) - 1


@pytest.mark.parametrize("n", [50, 300, 1000, 5000])
@pytest.mark.parametrize("mu", [-0.5, -0.1, 0.0, 0.3])
def test_gamma_max_root_residual(n, mu):
    b, c, d1 = mu_upper(mu), mu_range(mu), 0.05 / 400
    gm = gamma_max(n, b, c, d1)
    scale = math.exp(gm * b) + gm * b * (1 + b * b / variance_floor(n, c, d1)) + 1
    assert gm > 0
    assert abs(_H(gm, b, c, n, d1)) <= 1e-8 * scale


def test_gamma_max_lambert_argument_in_open_branch_range():
    for n in (10, 100, 10000):
        for mu in (-0.5, 0.0, 0.4):
            b, c = mu_upper(mu), mu_range(mu)
            alpha = 1 / (1 + b * b / variance_floor(n, c, 0.001))
            x = -alpha * math.exp(-alpha)
            assert -1 / math.e < x < 0


def test_gamma_min_against_mpmath():
    mp.mp.dps = 40
    for n, mu, d2 in ((1000, 0.0, 1e-4), (279, -0.5, 1.25e-4), (50, 0.3, 0.01)):
        b, c = mu_upper(mu), mu_range(mu)
        arg = (4 * mp.mpf(b) ** 2 / (n * mp.mpf(c) ** 2) * mp.log(1 / mp.mpf(d2)) - 1) / mp.e
        ref = (mp.lambertw(arg).real + 1) / b
        assert gamma_min(n, b, c, d2) == pytest.approx(float(ref), rel=1e-12)
        assert gamma_min(n, b, c, d2) > 0


@pytest.mark.parametrize("n,mu", [(1000, 0.0), (279, -0.5), (5000, 0.25), (100, 0.45)])
def test_gamma_grid_covers_range(n, mu):
    b, c, d = mu_upper(mu), mu_range(mu), 0.05 / 400
    g = gamma_grid(n, b, c, d, d)
    lo, hi = gamma_min(n, b, c, d), gamma_max(n, b, c, d)
    assert g[0] == lo
    assert np.all(np.diff(g) > 0)
    assert len(g) == math.ceil(math.log(hi / lo) / math.log(1.05))
    assert g[-1] >= hi / 1.05


def test_gamma_grid_degenerate_single_point():
    # a tiny sample makes the variance floor large and gamma_max collapse below gamma_min
    b, c = 1.0, 1.0
    lo, hi = gamma_min(2, b, c, 1e-6), gamma_max(2, b, c, 1e-6)
    assert hi <= lo
    np.testing.assert_array_equal(gamma_grid(2, b, c, 1e-6, 1e-6), [lo])


def test_grids_are_read_only():
    g = lambda_grid(1000, 0.025)
    with pytest.raises(ValueError):
        g[0] = 1.0


def test_offset_grids_budget_split():
    gs = offset_grids(1000, 0.05, 0.1, k_mu=200)
    assert gs.delta1 == gs.delta2 == 0.05 / 400
    assert gs.k_mu == 200
    assert gs.k_lambda == lambda_grid_size(1000, 0.05 / 400)
    np.testing.assert_array_equal(gs.gamma_grid, gamma_grid(1000, mu_upper(0.1), mu_range(0.1), gs.delta1, gs.delta2))


def test_gridset_json(tmp_path):
    gs = offset_grids(300, 0.05, -0.2, k_mu=10)
    text = gs.to_json(tmp_path / "g.json")
    d = json.loads(text)
    assert d["k_gamma"] == gs.k_gamma and len(d["gamma_grid"]) == gs.k_gamma
    assert json.loads((tmp_path / "g.json").read_text()) == d


def test_snap_nearest_with_ties_to_smaller():
    grid = np.array([1.0, 2.0, 4.0])
    assert snap(2.9, grid) == (2.0, 1)
    assert snap(1.5, grid) == (1.0, 0)
    assert snap(3.0, grid) == (2.0, 1)
    assert snap(-5.0, grid) == (1.0, 0)
    assert snap(100.0, grid) == (4.0, 2)

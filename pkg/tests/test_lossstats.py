import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_table, table_from_errors
from mvbound.dataio import NOT_EVALUATED, PredictionTable
from mvbound.lossstats import (
    gibbs_losses,
    loss_stats,
    mu_range,
    mu_tandem_stats,
    second_moment_identity_check,
    tandem_losses,
)


def test_gibbs_perfect_and_always_wrong():
    errors = np.array([[0] * 5, [1] * 5])
    np.testing.assert_array_equal(gibbs_losses(table_from_errors(errors)), [0.0, 1.0])


def test_gibbs_hand_count():
    errors = np.zeros((1, 14), dtype=bool)
    errors[0, [0, 4, 7]] = True
    mask = np.ones((1, 14), dtype=bool)
    mask[0, [1, 2, 3, 12]] = False
    assert gibbs_losses(table_from_errors(errors, mask))[0] == pytest.approx(0.3, abs=1e-15)


def test_gibbs_empty_validation_set():
    class Stub:
        oob_mask = np.array([[True, True], [False, False]])

        def errors(self):
            return np.zeros((2, 2), dtype=bool)

    with pytest.raises(ValueError, match="empty validation set"):
        gibbs_losses(Stub())


def test_tandem_identical_hypotheses_equals_gibbs():
    e = np.array([1, 0, 1, 1, 0, 0, 0, 1], dtype=bool)
    tandem, overlap = tandem_losses(table_from_errors(np.vstack([e, e])))
    assert np.all(tandem == e.mean())
    assert np.all(overlap == 8)


def test_tandem_disjoint_errors():
    a = np.array([1, 1, 0, 0, 0, 0], dtype=bool)
    b = np.array([0, 0, 1, 1, 0, 0], dtype=bool)
    tandem, _ = tandem_losses(table_from_errors(np.vstack([a, b])))
    assert tandem[0, 1] == 0.0 and tandem[1, 0] == 0.0


def test_tandem_hand_2x12_enumeration():
    e = np.array([[1, 0, 1, 1, 0, 0, 1, 0, 1, 0, 0, 1], [1, 1, 0, 1, 0, 1, 1, 0, 0, 0, 1, 1]], dtype=bool)
    m = np.array([[1, 1, 1, 0, 1, 1, 1, 1, 0, 1, 1, 1], [1, 0, 1, 1, 1, 1, 1, 0, 1, 1, 1, 1]], dtype=bool)
    tandem, overlap = tandem_losses(table_from_errors(e, m))
    for h in range(2):
        for g in range(2):
            idx = [i for i in range(12) if m[h, i] and m[g, i]]
            ref = sum(1 for i in idx if e[h, i] and e[g, i]) / len(idx)
            assert tandem[h, g] == ref
            assert overlap[h, g] == len(idx)
    assert tandem[0, 1] == 3 / 8


def test_tandem_empty_overlap_names_pair():
    e = np.zeros((2, 4), dtype=bool)
    m = np.array([[1, 1, 0, 0], [0, 0, 1, 1]], dtype=bool)
    with pytest.raises(ValueError, match="hypotheses 0 and 1"):
        tandem_losses(table_from_errors(e, m))


def test_loss_stats_structure(rng):
    t = random_table(rng, 6, 80)
    s = loss_stats(t)
    np.testing.assert_array_equal(s.tandem, s.tandem.T)
    np.testing.assert_array_equal(s.overlap, s.overlap.T)
    np.testing.assert_array_equal(np.diag(s.overlap), t.oob_mask.sum(axis=1))
    np.testing.assert_allclose(np.diag(s.tandem), s.gibbs, rtol=0, atol=1e-15)
    assert s.n_min == t.oob_mask.sum(axis=1).min()
    assert s.m_min == s.overlap.min()
    assert np.all(s.tandem >= 0)


def test_loss_stats_csv(tmp_path, rng):
    s = loss_stats(random_table(rng, 3, 30))
    s.to_csv(tmp_path / "s.csv")
    rows = (tmp_path / "s.csv").read_text().splitlines()
    assert rows[0] == "hypothesis,gibbs,tandem_0,tandem_1,tandem_2"
    assert float(rows[2].split(",")[1]) == s.gibbs[1]


def test_mu_zero_is_bitwise_tandem(rng):
    for _ in range(20):
        t = random_table(rng, 5, 60)
        s = loss_stats(t)
        assert np.array_equal(s.mu_tandem(0.0).loss, s.tandem)


def test_mu_range_examples():
    assert mu_range(0.0) == 1.0
    assert mu_range(-0.5) == 2.0
    assert mu_range(0.25) == 0.75


def test_mu_tandem_constant_pattern():
    t = table_from_errors(np.ones((2, 10), dtype=bool))
    for mu in (-0.4, 0.0, 0.3):
        ms = mu_tandem_stats(t, mu)
        np.testing.assert_allclose(ms.loss, (1 - mu) ** 2, rtol=1e-15)
        np.testing.assert_array_equal(ms.variance, 0.0)
        assert ms.b_mu == (1 - mu) ** 2


def _direct_mu_tandem(table, mu):
    # straight from the definition, pair by pair
    E = table.errors().astype(float)
    M = table.oob_mask
    H = E.shape[0]
    loss = np.zeros((H, H))
    var = np.zeros((H, H))
    for h in range(H):
        for g in range(H):
            idx = M[h] & M[g]
            z = (E[h, idx] - mu) * (E[g, idx] - mu)
            loss[h, g] = z.mean()
            var[h, g] = z.var(ddof=1)
    return loss, var


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 31), st.floats(-0.5, 0.49))
def test_mu_tandem_matches_definition(seed, mu):
    t = random_table(np.random.default_rng(seed), 4, 40)
    ms = mu_tandem_stats(t, mu)
    loss, var = _direct_mu_tandem(t, mu)
    np.testing.assert_allclose(ms.loss, loss, rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(ms.variance, var, rtol=1e-10, atol=1e-14)
    assert np.all(ms.variance >= 0)
    lo = min(-mu * (1 - mu), mu * mu)
    assert np.all(ms.loss >= lo - 1e-15) and np.all(ms.loss <= (1 - mu) ** 2 + 1e-15)
    np.testing.assert_array_equal(ms.loss, ms.loss.T)


def test_mu_tandem_errors():
    t = table_from_errors(np.ones((2, 10), dtype=bool))
    with pytest.raises(ValueError):
        mu_tandem_stats(t, 0.5)
    m = np.array([[1, 1, 0], [0, 1, 1]], dtype=bool)
    with pytest.raises(ValueError, match="fewer than 2"):
        mu_tandem_stats(table_from_errors(np.zeros((2, 3), dtype=bool), m), 0.0)


def test_second_moment_identity_random(rng):
    for _ in range(30):
        H, N = rng.integers(1, 8), rng.integers(5, 200)
        preds = rng.integers(3, size=(H, N))
        t = PredictionTable.full(preds, rng.integers(3, size=N), 3)
        rho = rng.dirichlet(np.ones(H))
        lhs, rhs = second_moment_identity_check(t, rho)
        assert abs(lhs - rhs) <= 1e-12


def test_second_moment_identity_single_hypothesis():
    t = table_from_errors(np.array([[1, 0, 1, 0, 0]], dtype=bool))
    lhs, rhs = second_moment_identity_check(t, [1.0])
    assert lhs == pytest.approx(0.4) and rhs == pytest.approx(0.4)


def test_second_moment_identity_uses_common_set():
    e = np.array([[1, 1, 0, 0], [1, 0, 1, 1]], dtype=bool)
    m = np.array([[1, 1, 1, 0], [0, 1, 1, 1]], dtype=bool)
    lhs, rhs = second_moment_identity_check(table_from_errors(e, m), [0.5, 0.5])
    # common set = points 1, 2; direct computation
    assert lhs == pytest.approx(((0.5 * 1 + 0.5 * 0) ** 2 + (0.5 * 0 + 0.5 * 1) ** 2) / 2)
    assert rhs == pytest.approx(lhs)


def test_feasible_region_on_common_set(rng):
    for _ in range(50):
        H, N = rng.integers(1, 6), rng.integers(5, 100)
        t = PredictionTable.full(rng.integers(2, size=(H, N)), rng.integers(2, size=N), 2)
        s = loss_stats(t)
        rho = rng.dirichlet(np.ones(H))
        g, tt = rho @ s.gibbs, rho @ s.tandem @ rho
        assert g * g <= tt + 1e-12 and tt <= g + 1e-12

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from zipsbm.likelihood import (BlockParams, BlockStats, ZipHyper, block_stats, collapsed_log_ml_w,
                               collapsed_log_ml_x, log_factorial_sum, predictive_w_log, predictive_x,
                               sample_block_params, zip_log_pmf)

HYPERS = [ZipHyper(1, 9, 1, 1), ZipHyper(0.5, 2.5, 2.0, 0.7), ZipHyper(3, 1, 0.8, 3.0)]


# --- zip pmf -------------------------------------------------------------------

def test_zip_zero_mass():
    assert zip_log_pmf(0, 0.15, 3.0) == pytest.approx(math.log(0.15 + 0.85 * math.exp(-3)), abs=1e-14)
    assert math.exp(zip_log_pmf(0, 0.15, 3.0)) == pytest.approx(0.1923190, abs=1e-7)


def test_zip_positive_mass():
    assert zip_log_pmf(2, 0.5, 1.0) == pytest.approx(math.log(0.5 * math.exp(-1) / 2), abs=1e-14)


@pytest.mark.parametrize("lam", [0.1, 1.0, 3.0, 12.5])
def test_zip_without_inflation_is_poisson(lam):
    y = np.arange(30)
    assert np.allclose(zip_log_pmf(y, 0.0, lam), stats.poisson.logpmf(y, lam), rtol=0, atol=1e-13)


@pytest.mark.parametrize("pi", [0.0, 0.05, 0.6, 0.99])
@pytest.mark.parametrize("lam", [0.01, 1.0, 7.0, 20.0])
def test_zip_normalizes(pi, lam):
    assert np.exp(zip_log_pmf(np.arange(501), pi, lam)).sum() == pytest.approx(1.0, abs=1e-8)


# --- collapsed marginals against quadrature --------------------------------------

def _quad_x(n, x, h):
    f = lambda p: p ** x * (1 - p) ** (n - x) * stats.beta.pdf(p, h.a, h.b)
    return integrate.quad(f, 0, 1, epsabs=0, epsrel=1e-11, limit=200)[0]


def _quad_w(ws, h):
    ws = np.asarray(ws)
    log_fact = np.sum([math.lgamma(w + 1) for w in ws])

    def f(lam):
        return math.exp(ws.sum() * math.log(lam) - ws.size * lam - log_fact
                        + stats.gamma.logpdf(lam, h.a1, scale=1 / h.a2))

    return integrate.quad(f, 0, np.inf, epsabs=0, epsrel=1e-11, limit=400)[0]


def _split(w, n, rng):
    if n == 0:
        return np.zeros(0, dtype=int)
    return rng.multinomial(w, np.ones(n) / n)


@pytest.mark.parametrize("h", HYPERS)
def test_collapsed_x_matches_quadrature(h):
    for n in range(5):
        for x in range(n + 1):
            exact = math.exp(collapsed_log_ml_x(BlockStats.single(n, x, 0), h))
            assert exact == pytest.approx(_quad_x(n, x, h), rel=1e-6)


@pytest.mark.parametrize("h", HYPERS)
def test_collapsed_w_matches_quadrature(h):
    rng = np.random.default_rng(0)
    for n in range(1, 5):
        for w in range(9):
            ws = _split(w, n, rng)
            lf = float(np.sum([math.lgamma(v + 1) for v in ws]))
            exact = math.exp(collapsed_log_ml_w(BlockStats.single(n, 0, w), h, lf))
            assert exact == pytest.approx(_quad_w(ws, h), rel=1e-6)


def test_empty_block_contributes_nothing():
    h = ZipHyper()
    assert collapsed_log_ml_x(BlockStats.single(0), h) == 0.0
    assert collapsed_log_ml_w(BlockStats.single(0), h) == 0.0


def test_marginal_x_examples():
    assert collapsed_log_ml_x(BlockStats.single(1, 0), ZipHyper(1, 9)) == pytest.approx(math.log(0.9), abs=1e-14)
    assert collapsed_log_ml_x(BlockStats.single(2, 1), ZipHyper(1, 1)) == pytest.approx(math.log(1 / 6), abs=1e-14)


def test_marginal_w_examples():
    h = ZipHyper(1, 9, 1, 1)
    assert collapsed_log_ml_w(BlockStats.single(1, 0, 0), h) == pytest.approx(math.log(0.5), abs=1e-14)
    W = np.array([[0, 2], [2, 0]])
    lf = log_factorial_sum(W)
    assert lf == pytest.approx(math.log(2))
    assert collapsed_log_ml_w(BlockStats.single(1, 0, 2), h, lf) == pytest.approx(math.log(1 / 8), abs=1e-14)


def test_log_factorial_sum_strict_lower_triangle():
    W = np.array([[9, 3, 0], [3, 9, 4], [0, 4, 9]])
    assert log_factorial_sum(W) == pytest.approx(math.log(6) + math.log(24))


def test_multi_block_marginal_is_sum_over_lower_triangle():
    h = ZipHyper(1, 9, 1, 1)
    n = np.array([[3, 2], [2, 1]])
    x = np.array([[1, 0], [0, 1]])
    w = np.array([[4, 1], [1, 0]])
    total = sum(collapsed_log_ml_x(BlockStats.single(n[i, j], x[i, j]), h) for i, j in [(0, 0), (1, 0), (1, 1)])
    assert collapsed_log_ml_x(BlockStats(n, x, w), h) == pytest.approx(total, abs=1e-13)


# --- predictives ---------------------------------------------------------------

def test_predictive_x_examples():
    assert predictive_x(0, 0, ZipHyper(1, 9)) == pytest.approx(0.1)
    assert predictive_x(3, 10, ZipHyper(1, 9)) == pytest.approx(0.2)
    assert predictive_x(5, 5, ZipHyper(1, 1)) == pytest.approx(6 / 7)


def test_predictive_w_examples():
    h = ZipHyper(1, 9, 1, 1)
    assert predictive_w_log(0, 0, 0, h) == pytest.approx(math.log(0.5), abs=1e-14)
    assert predictive_w_log(1, 0, 0, h) == pytest.approx(math.log(0.25), abs=1e-14)
    total = sum(math.exp(predictive_w_log(w, 0, 0, h)) for w in range(201))
    assert total == pytest.approx(1.0, abs=1e-10)


@pytest.mark.parametrize("w_rest, n_rest", [(0, 0), (7, 3), (40, 12)])
def test_predictive_w_is_negative_binomial(w_rest, n_rest):
    h = ZipHyper(1, 9, 1.3, 0.6)
    p = (h.a2 + n_rest) / (h.a2 + n_rest + 1)
    ws = np.arange(60)
    ours = np.array([predictive_w_log(w, w_rest, n_rest, h) for w in ws])
    assert np.allclose(ours, stats.nbinom.logpmf(ws, h.a1 + w_rest, p), atol=1e-12)


@settings(max_examples=300, deadline=None)
@given(n=st.integers(0, 200), data=st.data(), hi=st.sampled_from(range(len(HYPERS))))
def test_predictive_is_marginal_ratio(n, data, hi):
    h = HYPERS[hi]
    x = data.draw(st.integers(0, n))
    w_rest = data.draw(st.integers(0, 500))
    w_new = data.draw(st.integers(0, 30))
    lx = math.log(predictive_x(x, n, h))
    ratio_x = collapsed_log_ml_x(BlockStats.single(n + 1, x + 1), h) - collapsed_log_ml_x(BlockStats.single(n, x), h)
    assert abs(lx - ratio_x) <= 1e-12
    ratio_w = (collapsed_log_ml_w(BlockStats.single(n + 1, 0, w_rest + w_new), h, math.lgamma(w_new + 1))
               - collapsed_log_ml_w(BlockStats.single(n, 0, w_rest), h))
    assert abs(predictive_w_log(w_new, w_rest, n, h) - ratio_w) <= 1e-12 * max(1.0, abs(ratio_w))


# --- block statistics ----------------------------------------------------------

def test_block_stats_hand_count():
    W = np.array([[0, 2, 0], [2, 0, 1], [0, 1, 0]])
    s = block_stats([0, 0, 1], np.zeros((3, 3), int), W)
    assert s.n.tolist() == [[1, 2], [2, 0]]
    assert s.w.tolist() == [[2, 1], [1, 0]]
    assert not s.x.any()


def test_block_stats_singletons_and_single_group():
    s = block_stats([0, 1, 2], np.zeros((3, 3), int), np.zeros((3, 3), int))
    assert np.all(np.diag(s.n) == 0) and np.all(s.n[~np.eye(3, dtype=bool)] == 1)
    assert block_stats([0] * 4, np.zeros((4, 4), int), np.zeros((4, 4), int)).n.tolist() == [[6]]


@settings(max_examples=100, deadline=None)
@given(data=st.data(), V=st.integers(2, 10))
def test_block_stats_against_brute_force(data, V):
    rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
    z = rng.integers(0, 3, size=V)
    z = np.unique(z, return_inverse=True)[1]
    X = np.tril(rng.integers(0, 2, size=(V, V)), -1)
    X = X + X.T
    W = np.tril(rng.integers(0, 5, size=(V, V)), -1)
    W = W + W.T
    s = block_stats(z, X, W)
    H = z.max() + 1
    for h in range(H):
        for k in range(H):
            pairs = [(v, u) for v in range(V) for u in range(v)
                     if sorted((z[v], z[u])) == sorted((h, k))]
            assert s.n[h, k] == len(pairs)
            assert s.x[h, k] == sum(X[v, u] for v, u in pairs)
            assert s.w[h, k] == sum(W[v, u] for v, u in pairs)
            assert 0 <= s.x[h, k] <= s.n[h, k]


def test_block_stats_dimension_check():
    with pytest.raises(ValueError):
        block_stats([0, 0, 1], np.zeros((2, 2)), np.zeros((3, 3)))


# --- conjugate draws -----------------------------------------------------------

def test_empty_block_draws_from_prior():
    rng = np.random.default_rng(1)
    h = ZipHyper(1, 9, 1, 1)
    draws = [sample_block_params(BlockStats.single(0), h, rng) for _ in range(20000)]
    assert np.mean([d.pi_bar[0, 0] for d in draws]) == pytest.approx(0.1, abs=0.005)
    assert np.mean([d.lambda_bar[0, 0] for d in draws]) == pytest.approx(1.0, abs=0.03)


def test_posterior_means_monte_carlo():
    rng = np.random.default_rng(2)
    n = np.array([[100, 50], [50, 50]])
    x = np.array([[10, 0], [0, 0]])
    w = np.array([[0, 150], [150, 0]])
    pis, lams = [], []
    for _ in range(100_000 // 10):
        for _ in range(10):
            d = sample_block_params(BlockStats(n, x, w), ZipHyper(1, 9, 1, 1), rng)
            pis.append(d.pi_bar[0, 0])
            lams.append(d.lambda_bar[1, 0])
    assert np.mean(pis) == pytest.approx(0.1, abs=0.01)
    assert np.mean(lams) == pytest.approx(151 / 51, abs=0.01)


def test_block_params_symmetric_lower_round_trip():
    rng = np.random.default_rng(3)
    n = np.array([[3, 2, 1], [2, 4, 0], [1, 0, 0]])
    d = sample_block_params(BlockStats(n, np.zeros_like(n), n), ZipHyper(), rng)
    assert np.array_equal(d.pi_bar, d.pi_bar.T) and np.array_equal(d.lambda_bar, d.lambda_bar.T)
    back = BlockParams.from_lower(*d.lower())
    assert np.array_equal(back.pi_bar, d.pi_bar) and np.array_equal(back.lambda_bar, d.lambda_bar)
    assert np.all((d.pi_bar > 0) & (d.pi_bar < 1)) and np.all(d.lambda_bar > 0)


@pytest.mark.parametrize("bad", [dict(a=0), dict(b=-1), dict(a1=0), dict(a2=-0.5)])
def test_hyper_must_be_positive(bad):
    with pytest.raises(ValueError):
        ZipHyper(**bad)

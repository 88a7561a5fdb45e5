import numpy as np
import pytest

from wpbc.channel import backscatter_matrix, draw_channels, rng_for
from wpbc.estimation import (EstimationError, build_pilots, estimate_ls,
                             estimate_mmse, forward_error_var,
                             forward_posterior, ls_error_variance,
                             mmse_error_variance, simulate_ce_rx)


def test_scalar_pilot_case():
    pilots = build_pilots(1, 1, 2.0)
    assert pilots.G.shape == (1, 1)
    assert pilots.G[0, 0] == pytest.approx(1.0)
    assert pilots.B[0, 0] == pytest.approx(2.0)


def test_pilot_orthonormality():
    pilots = build_pilots(4, 8, 1.5)
    gram = pilots.G.conj().T @ pilots.G
    assert np.max(np.abs(gram - np.eye(4))) < 1e-12


def test_pilot_length_precondition():
    with pytest.raises(EstimationError):
        build_pilots(4, 3, 1.0)


def test_ls_noiseless_round_trip(config, stats):
    pilots = build_pilots(config.M, 10, 2.0)
    real = draw_channels(config, stats, 7, 0)
    Y = simulate_ce_rx(real, 0, pilots, config.delta[0], 0.0, rng_for(7, 1, 0))
    H_hat, _ = estimate_ls(Y, pilots, config.delta[0], config.noise_power)
    H = backscatter_matrix(real, 0)
    assert np.max(np.abs(H_hat - H)) < 1e-12 * np.max(np.abs(H))


def test_zero_reflection_gives_pure_noise(config, stats):
    pilots = build_pilots(config.M, 10, 2.0)
    real = draw_channels(config, stats, 7, 1)
    Y = simulate_ce_rx(real, 0, pilots, 0.0, 1e-13, rng_for(7, 1, 1))
    assert np.mean(np.abs(Y) ** 2) == pytest.approx(1e-13, rel=0.2)


def test_ce_noise_variance_over_many_draws(config, stats):
    # 1000 draws x (R x D) entries -> sample variance within 5% of sigma^2
    pilots = build_pilots(config.M, 10, 2.0)
    total, count = 0.0, 0
    for i in range(1000):
        real = draw_channels(config, stats, 21, i)
        Y = simulate_ce_rx(real, 0, pilots, 0.0, 1e-13, rng_for(21, 1, i))
        total += float(np.sum(np.abs(Y) ** 2))
        count += Y.size
    assert total / count == pytest.approx(1e-13, rel=0.05)


def test_ls_error_variance_formula():
    # sigma2=1e-13, D=10, p_ce=2, delta=0.25 -> 2e-14
    assert ls_error_variance(1e-13, 10, 2.0, 0.25) == pytest.approx(2e-14, rel=1e-12)


def test_silent_tag_rejected(config, stats):
    pilots = build_pilots(config.M, 10, 2.0)
    Y = np.zeros((config.R, 10), dtype=complex)
    with pytest.raises(EstimationError):
        estimate_ls(Y, pilots, 0.0, 1e-13)


def _error_samples(config, stats, method, n, seed):
    pilots = build_pilots(config.M, 10, 2.0)
    errs = []
    ests = []
    for i in range(n):
        real = draw_channels(config, stats, seed, i)
        Y = simulate_ce_rx(real, 0, pilots, config.delta[0], config.noise_power,
                           rng_for(seed, 1, i))
        if method == "ls":
            H_hat, var = estimate_ls(Y, pilots, config.delta[0], config.noise_power)
        else:
            H_hat, var = estimate_mmse(Y, pilots, config.delta[0], stats.beta[0],
                                       config.noise_power)
        errs.append((H_hat - backscatter_matrix(real, 0)).ravel())
        ests.append(H_hat.ravel())
    return np.concatenate(errs), np.concatenate(ests), var


@pytest.mark.parametrize("method", ["ls", "mmse"])
def test_error_variance_monte_carlo(config, stats, method):
    # 1e4 draws x 16 entries = 1.6e5 samples; 2% tolerance has ~5 sigma slack
    err, _, var = _error_samples(config, stats, method, 10_000, 13)
    assert np.mean(np.abs(err) ** 2) == pytest.approx(var, rel=0.02)


@pytest.mark.parametrize("method", ["ls", "mmse"])
def test_estimators_unbiased(config, stats, method):
    err, _, var = _error_samples(config, stats, method, 10_000, 29)
    se = np.sqrt(var / err.size)
    assert abs(err.mean()) < 5 * se


def test_mmse_error_orthogonal_to_estimate(config, stats):
    err, est, _ = _error_samples(config, stats, "mmse", 10_000, 31)
    corr = np.vdot(est, err) / (np.linalg.norm(est) * np.linalg.norm(err))
    assert abs(corr) < 0.02


def test_mmse_beats_ls_everywhere():
    for d in (0.05, 0.25, 1.0):
        for pce in (1e-3, 1.0, 50.0):
            for beta in (1e-6, 1e-4):
                ls = ls_error_variance(1e-13, 8, pce, d)
                mm = mmse_error_variance(1e-13, 8, pce, d, beta)
                assert mm <= min(beta ** 2, ls) * (1 + 1e-12)


def test_mmse_limits():
    beta = 1e-4
    assert mmse_error_variance(1e-13, 10, 1e12, 0.25, beta) == pytest.approx(0.0, abs=1e-20)
    assert mmse_error_variance(1e-13, 10, 1e-30, 0.25, beta) == pytest.approx(beta ** 2, rel=1e-6)


def test_mmse_consistency_at_high_pilot_power(config, stats):
    pilots = build_pilots(config.M, 10, 1e6)
    real = draw_channels(config, stats, 3, 0)
    Y = simulate_ce_rx(real, 0, pilots, config.delta[0], config.noise_power,
                       rng_for(3, 1, 0))
    H_hat, var = estimate_mmse(Y, pilots, config.delta[0], stats.beta[0],
                               config.noise_power)
    H = backscatter_matrix(real, 0)
    assert var < 1e-8 * stats.beta[0] ** 2
    assert np.max(np.abs(H_hat - H)) < 1e-3 * np.max(np.abs(H))


def test_estimate_all_bundles_every_tag(config, stats):
    from wpbc.estimation import estimate_all
    pilots = build_pilots(config.M, 10, 2.0)
    real = draw_channels(config, stats, 19, 0)
    Y = np.stack([simulate_ce_rx(real, k, pilots, config.delta[k], 0.0,
                                 rng_for(19, 1, k)) for k in range(config.K)])
    est = estimate_all(Y, pilots, config, stats, "mmse", config.noise_power)
    assert est.method == "mmse"
    assert est.H_hat.shape == (config.K, config.R, config.M)
    assert est.err_var.shape == (config.K,)
    assert np.all(est.err_var <= np.asarray(stats.beta) ** 2)


def test_forward_error_var_reduces_to_bs_variance():
    # |h|^2 = 1, K = 1, alpha = D recovers the plain LS error variance
    v = forward_error_var("ls", 1.0, 1e-4, 1e-13, 0.25, alpha=10, p_ce=2.0, K=1)
    assert v == pytest.approx(ls_error_variance(1e-13, 10, 2.0, 0.25), rel=1e-12)


def test_forward_error_var_inverse_in_backward_power():
    a = forward_error_var("ls", 1.0, 1e-4, 1e-13, 0.25, alpha=20, p_ce=2.0, K=2)
    b = forward_error_var("ls", np.sqrt(2.0), 1e-4, 1e-13, 0.25, alpha=20, p_ce=2.0, K=2)
    assert a / b == pytest.approx(2.0, rel=1e-12)
    for method in ("ls", "mmse"):
        v = forward_error_var(method, 0.3 + 0.1j, 4.25e-5, 1e-13, 0.25,
                              alpha=120, p_ce=2.0, K=2)
        assert np.isfinite(v) and v > 0


def test_forward_error_var_zero_backward_rejected():
    with pytest.raises(EstimationError):
        forward_error_var("ls", 0.0, 1e-4, 1e-13, 0.25, alpha=10, p_ce=2.0, K=1)


def test_posterior_limits():
    h_hat = np.array([1.0 + 1j, -0.5j])
    trusted = forward_posterior(h_hat, 1.0, beta_k=1e-4, err_var=1e-22)
    assert np.allclose(trusted.mean, h_hat, rtol=1e-12)
    assert trusted.cov_scalar < 1e-21
    prior = forward_posterior(h_hat, 1e-12, beta_k=1e-4, err_var=1.0)
    assert np.max(np.abs(prior.mean)) < 1e-20
    assert prior.cov_scalar == pytest.approx(1e-4, rel=1e-6)


def test_posterior_binned_monte_carlo():
    # joint draws of (h, h_hat) at fixed backward coefficient; conditional
    # mean and residual variance must match the closed form within 5%
    rng = np.random.default_rng(2024)
    n = 200_000
    beta, err_var = 1.0, 0.5
    h_b = 0.8 - 0.6j
    h = np.sqrt(beta / 2) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    e = np.sqrt(err_var / 2) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    h_hat_f = (h * h_b + e) / h_b
    post = forward_posterior(np.array([1.0]), h_b, beta, err_var)
    gain = abs(post.mean[0])
    assert gain == pytest.approx(beta / (beta + err_var), rel=1e-12)
    edges = np.quantile(h_hat_f.real, np.linspace(0, 1, 9))
    for lo, hi in zip(edges[:-1], edges[1:]):
        m = (h_hat_f.real >= lo) & (h_hat_f.real <= hi)
        predicted = gain * h_hat_f.real[m].mean()
        assert abs(h.real[m].mean() - predicted) < 0.05 * np.sqrt(beta)
    resid_var = np.var(h - gain * h_hat_f)
    assert resid_var == pytest.approx(post.cov_scalar, rel=0.05)

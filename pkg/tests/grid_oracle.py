"""Exhaustive-grid oracle for the two-tag max-min designs.

Evaluates the closed-form objectives over a dense (zeta1, alpha, p_ce) grid
with vectorized numpy, independent of the solver's search path. Resolution:
1e-3 on zeta1, every feasible CE duration (multiples of K with alpha/K >= M),
and 1e-2 W on pilot power.
"""

import numpy as np

from wpbc.analytics import gain_retention_bounds

PCE_STEP = 1e-2
ZETA_STEP = 1e-3


def _bounds_grid(config, stats, estimator, alpha, p_ce, zeta1):
    """Incident-power bounds on a (n_pce, n_zeta, K) grid for K=2."""
    beta = np.asarray(stats.beta)
    delta = np.asarray(config.delta)
    s2 = config.noise_power
    p = (config.w * config.T - alpha * p_ce) / (config.T - alpha)  # (n_pce,)
    zeta = np.stack([zeta1, 1.0 - zeta1], axis=-1)  # (n_zeta, 2)
    x = beta[None, :] ** 2 * alpha * p_ce[:, None] * delta[None, :]
    if estimator == "ls":
        c = config.K * s2 / x
    else:
        c = config.K * s2 / (config.K * s2 + x)
    lo, hi = gain_retention_bounds(c)  # (n_pce, 2)
    shape = (len(p_ce), len(zeta1), config.K)
    P_lo = np.empty(shape)
    P_hi = np.empty(shape)
    for k in range(config.K):
        P_lo[:, :, k] = p[:, None] * beta[k] * (
            zeta[None, :, k] * (config.M - 1) * lo[:, k, None] + 1.0)
        P_hi[:, :, k] = p[:, None] * beta[k] * (
            zeta[None, :, k] * (config.M - 1) * hi[:, k, None] + 1.0)
    return c, P_lo, P_hi


def _rates_grid(config, stats, estimator, receiver, alpha, p_ce, zeta1):
    beta = np.asarray(stats.beta)
    delta = np.asarray(config.delta)
    s2 = config.noise_power
    tau = config.tau
    R, K = config.R, config.K
    c, P_lo, P_hi = _bounds_grid(config, stats, estimator, alpha, p_ce, zeta1)
    err = beta[None, :] ** 2 * c  # (n_pce, 2)
    _, L2 = gain_retention_bounds(c)
    p_lo = delta[None, None, :] * P_lo
    p_hi = delta[None, None, :] * P_hi
    xu = np.exp(-tau / beta) * np.log1p(beta / tau)
    self_t = p_hi * (err / beta)[:, None, :] * np.log1p(1.0 / c)[:, None, :]
    direct = p_hi * beta[None, None, :]
    errterm = p_hi * (err * xu / beta)[:, None, :]
    if receiver == "mrc":
        interf = (direct.sum(axis=2, keepdims=True) - direct) \
            + 2.0 * (errterm.sum(axis=2, keepdims=True) - errterm)
        num = p_lo * (R - 1) * beta[None, None, :]
    else:
        interf = errterm.sum(axis=2, keepdims=True) - errterm
        num = p_lo * (R - K) * beta[None, None, :]
    denom = L2[:, None, :] * (interf + s2) + self_t
    rates = np.log2(1.0 + num / denom)
    pe = config.eta * (1.0 - delta)[None, None, :] * P_lo
    return rates, pe


def grid_maxmin(config, stats, estimator, receiver, objective="rate",
                alphas=None, pce_step=PCE_STEP, zeta_step=ZETA_STEP):
    """Best min-over-tags objective on the full grid. Returns (value, point)."""
    assert config.K == 2, "oracle is specialized to two tags"
    zeta1 = np.arange(0.0, 1.0 + zeta_step / 2, zeta_step)
    if alphas is None:
        top = int((config.T - 1) // config.K)
        alphas = [config.K * d for d in range(config.M, top + 1)]
    best = -np.inf
    best_point = None
    for alpha in alphas:
        cap = 0.99 * config.w * config.T / alpha
        p_ce = np.arange(pce_step, cap, pce_step)
        if len(p_ce) == 0:
            continue
        for start in range(0, len(p_ce), 256):
            sub = p_ce[start:start + 256]
            rates, pe = _rates_grid(config, stats, estimator, receiver,
                                    alpha, sub, zeta1)
            feasible = np.all(pe >= config.rho, axis=2)
            score = np.where(feasible,
                             (pe if objective == "energy" else rates).min(axis=2),
                             -np.inf)
            idx = np.unravel_index(np.argmax(score), score.shape)
            if score[idx] > best:
                best = float(score[idx])
                best_point = (float(zeta1[idx[1]]), float(alpha), float(sub[idx[0]]))
    return best, best_point


def grid_maxmin_pinned(config, stats, estimator, receiver, alpha, p_ce,
                       objective="rate", zeta_step=ZETA_STEP):
    """Same oracle with the CE slot pinned (zeta-only grid)."""
    zeta1 = np.arange(0.0, 1.0 + zeta_step / 2, zeta_step)
    rates, pe = _rates_grid(config, stats, estimator, receiver,
                            alpha, np.array([p_ce]), zeta1)
    feasible = np.all(pe >= config.rho, axis=2)
    score = np.where(feasible,
                     (pe if objective == "energy" else rates).min(axis=2), -np.inf)
    j = int(np.argmax(score[0]))
    return float(score[0, j]), float(zeta1[j])

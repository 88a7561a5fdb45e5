"""Closed-form link expressions: the exponential integral, the CE-quality
penalty and its bounds, incident/harvest power bounds, MRC and ZF SINRs under
imperfect backscatter CSI, their tractable lower bounds, and the perfect-CSI
and omnidirectional benchmarks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_EULER_GAMMA = 0.5772156649015329
_TINY = 1e-300


class AnalyticsError(ValueError):
    pass


def _e1_series_scaled(t):
    # e^t * E1(t) for 0 < t < 1 via the convergent alternating series.
    total = -_EULER_GAMMA - np.log(t)
    term = 1.0
    for n in range(1, 60):
        term *= -t / n
        contrib = -term / n
        total += contrib
        if abs(contrib) < 1e-18 * max(abs(total), 1e-30):
            break
    return np.exp(t) * total


def _e1_cf_scaled(t):
    # e^t * E1(t) for t >= 1 via the Legendre continued fraction (Lentz).
    f = t + 1.0
    C = f
    D = 0.0
    for j in range(1, 300):
        a = -float(j * j)
        b = t + 2.0 * j + 1.0
        D = b + a * D
        if D == 0.0:
            D = _TINY
        C = b + a / C
        if C == 0.0:
            C = _TINY
        D = 1.0 / D
        delta = C * D
        f *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return 1.0 / f


def _exp_scaled_e1_scalar(t):
    t = float(t)
    if t <= 0:
        raise AnalyticsError(f"argument must be positive, got {t}")
    return _e1_series_scaled(t) if t < 1.0 else _e1_cf_scaled(t)


def exp_scaled_e1(t):
    """e^t * E1(t), overflow-free for large t."""
    if np.isscalar(t) or np.ndim(t) == 0:
        return _exp_scaled_e1_scalar(t)
    arr = np.asarray(t, dtype=float)
    return np.array([_exp_scaled_e1_scalar(v) for v in arr.ravel()]).reshape(arr.shape)


def exp_integral_e1(t):
    """E1(t) = integral_t^inf u^-1 e^-u du, absolute error <= 1e-12."""
    if np.isscalar(t) or np.ndim(t) == 0:
        return np.exp(-float(t)) * _exp_scaled_e1_scalar(t)
    arr = np.asarray(t, dtype=float)
    return np.exp(-arr) * exp_scaled_e1(arr)


def ce_penalty(c):
    """Expected beamforming-gain loss from estimation error: c e^c E1(c) in (0,1)."""
    c = np.asarray(c, dtype=float) if not np.isscalar(c) else float(c)
    return c * exp_scaled_e1(c)


def gain_retention_bounds(c):
    """Closed-form bounds (lo, hi) on 1 - ce_penalty(c).

    From (1/2) e^-t ln(1+2/t) < E1(t) < e^-t ln(1+1/t).
    """
    c = np.asarray(c, dtype=float)
    lo = 1.0 - c * np.log1p(1.0 / c)
    hi = 1.0 - 0.5 * c * np.log1p(2.0 / c)
    return lo, hi


def estimation_snr_recip(method, beta, alpha, p_ce, delta, sigma2, K):
    """Argument of ce_penalty for each estimator (the estimation-SNR reciprocal)."""
    beta = np.asarray(beta, dtype=float)
    delta = np.asarray(delta, dtype=float)
    x = beta ** 2 * alpha * p_ce * delta
    if np.any(x <= 0):
        raise AnalyticsError("beta, alpha, p_ce, delta must all be positive")
    if method == "ls":
        return K * sigma2 / x
    if method == "mmse":
        return K * sigma2 / (K * sigma2 + x)
    raise AnalyticsError(f"unknown estimator {method!r}")


def bs_error_variance(method, beta, alpha, p_ce, delta, sigma2, K):
    """Per-entry backscatter estimation error variance (equals beta^2 * c)."""
    beta = np.asarray(beta, dtype=float)
    return beta ** 2 * estimation_snr_recip(method, beta, alpha, p_ce, delta, sigma2, K)


def incident_power_bounds(p, beta, zeta, M, method, alpha, p_ce, delta, sigma2, K):
    """Lower/upper bounds on incident signal power at each tag."""
    beta = np.asarray(beta, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    if np.any(zeta < 0) or np.any(zeta > 1):
        raise AnalyticsError("zeta entries must lie in [0,1]")
    c = estimation_snr_recip(method, beta, alpha, p_ce, delta, sigma2, K)
    lo, hi = gain_retention_bounds(c)
    return p * beta * (zeta * (M - 1) * lo + 1.0), p * beta * (zeta * (M - 1) * hi + 1.0)


def exact_incident_power(p, beta, zeta, M, phi_value):
    """Closed-form incident power with the penalty evaluated exactly."""
    beta = np.asarray(beta, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    return p * beta * (zeta * (M - 1) * (1.0 - np.asarray(phi_value)) + 1.0)


def harvest_rate_bounds(P_low, P_high, eta, delta):
    """Energy-harvesting rate bounds: scale incident bounds by eta*(1-delta)."""
    factor = eta * (1.0 - np.asarray(delta, dtype=float))
    return factor * np.asarray(P_low), factor * np.asarray(P_high)


def truncated_inverse_power_mean(beta, tau):
    """E{1/|h|^2} for |h|^2 ~ Exp(mean beta) floored at tau: E1(tau/beta)/beta."""
    beta = np.asarray(beta, dtype=float)
    return exp_integral_e1(tau / beta) / beta


def sinr_mrc(p_refl, beta, err_var, phi_vals, sigma2, tau, R):
    """Per-tag MRC SINR with imperfect backscatter CSI (needs R >= 2)."""
    if R < 2:
        raise AnalyticsError(f"MRC needs R >= 2, got R={R}")
    p_refl = np.asarray(p_refl, dtype=float)
    beta = np.asarray(beta, dtype=float)
    err_var = np.asarray(err_var, dtype=float)
    phi_vals = np.asarray(phi_vals, dtype=float)
    if np.any(p_refl < 0):
        raise AnalyticsError("reflect powers must be non-negative")
    inv_mean = truncated_inverse_power_mean(beta, tau)
    direct = p_refl * beta
    errterm = p_refl * err_var * inv_mean
    interference = (direct.sum() - direct) + 2.0 * (errterm.sum() - errterm)
    denom = (1.0 - phi_vals) * (interference + sigma2) + direct * phi_vals
    return p_refl * (R - 1) * beta / denom


def sinr_zf(p_refl, beta, err_var, phi_vals, sigma2, tau, R, K):
    """Per-tag ZF SINR with imperfect backscatter CSI (needs R >= K+1)."""
    if R < K + 1:
        raise AnalyticsError(f"ZF needs R >= K+1, got R={R}, K={K}")
    p_refl = np.asarray(p_refl, dtype=float)
    beta = np.asarray(beta, dtype=float)
    err_var = np.asarray(err_var, dtype=float)
    phi_vals = np.asarray(phi_vals, dtype=float)
    inv_mean = truncated_inverse_power_mean(beta, tau)
    errterm = p_refl * err_var * inv_mean
    denom = (1.0 - phi_vals) * ((errterm.sum() - errterm) + sigma2) + p_refl * beta * phi_vals
    return p_refl * (R - K) * beta / denom


def sinr_lower_bounds(beta, delta, err_var, c, P_low, P_high, sigma2, tau, R, K):
    """Tractable per-tag SINR lower bounds for both receivers.

    Substitutes the incident-power bounds (lower in the signal, upper in the
    interference and self terms) and the closed-form bounds on the penalty
    and on the truncated inverse-power mean. Returns (mrc, zf); the zf entry
    is None when R < K+1.
    """
    beta = np.asarray(beta, dtype=float)
    delta = np.asarray(delta, dtype=float)
    err_var = np.asarray(err_var, dtype=float)
    c = np.asarray(c, dtype=float)
    p_lo = delta * np.asarray(P_low, dtype=float)
    p_hi = delta * np.asarray(P_high, dtype=float)
    _, retention_hi = gain_retention_bounds(c)
    inv_mean_hi = np.exp(-tau / beta) * np.log1p(beta / tau)
    self_term = p_hi * (err_var / beta) * np.log1p(1.0 / c)
    direct = p_hi * beta
    errterm = p_hi * err_var * inv_mean_hi / beta
    mrc = None
    if R >= 2:
        interference = (direct.sum() - direct) + 2.0 * (errterm.sum() - errterm)
        mrc = p_lo * (R - 1) * beta / (retention_hi * (interference + sigma2) + self_term)
    zf = None
    if R >= K + 1:
        interference = errterm.sum() - errterm
        zf = p_lo * (R - K) * beta / (retention_hi * (interference + sigma2) + self_term)
    return mrc, zf


def rate_from_sinr(sinr):
    return np.log2(1.0 + np.asarray(sinr, dtype=float))


@dataclass(frozen=True)
class ClosedFormReport:
    """Everything the closed forms say about one design point."""

    estimator: str
    carrier: float
    incident_lower: np.ndarray
    incident_upper: np.ndarray
    harvest_lower: np.ndarray
    harvest_upper: np.ndarray
    incident_exact: np.ndarray
    sinr_exact_mrc: np.ndarray
    sinr_exact_zf: np.ndarray
    sinr_lower_mrc: np.ndarray
    sinr_lower_zf: np.ndarray
    rate_lower_mrc: np.ndarray
    rate_lower_zf: np.ndarray


def closed_form_report(config, stats, zeta, alpha, p_ce, estimator):
    """Evaluate bounds, exact SINRs, and rate lower bounds at one design."""
    from .scenario import carrier_power

    beta = np.asarray(stats.beta, dtype=float)
    delta = np.asarray(config.delta, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    s2 = config.noise_power
    p = carrier_power(config.w, config.T, alpha, p_ce)
    c = estimation_snr_recip(estimator, beta, alpha, p_ce, delta, s2, config.K)
    err = beta ** 2 * c
    phi_vals = ce_penalty(c)
    P_lo, P_hi = incident_power_bounds(
        p, beta, zeta, config.M, estimator, alpha, p_ce, delta, s2, config.K)
    E_lo, E_hi = harvest_rate_bounds(P_lo, P_hi, config.eta, delta)
    P_ex = exact_incident_power(p, beta, zeta, config.M, phi_vals)
    p_refl = delta * P_ex
    g_mrc = sinr_mrc(p_refl, beta, err, phi_vals, s2, config.tau, config.R) \
        if config.R >= 2 else None
    g_zf = sinr_zf(p_refl, beta, err, phi_vals, s2, config.tau, config.R, config.K) \
        if config.R >= config.K + 1 else None
    gl_mrc, gl_zf = sinr_lower_bounds(
        beta, delta, err, c, P_lo, P_hi, s2, config.tau, config.R, config.K)
    report = ClosedFormReport(
        estimator=estimator,
        carrier=float(p),
        incident_lower=P_lo,
        incident_upper=P_hi,
        harvest_lower=E_lo,
        harvest_upper=E_hi,
        incident_exact=P_ex,
        sinr_exact_mrc=g_mrc,
        sinr_exact_zf=g_zf,
        sinr_lower_mrc=gl_mrc,
        sinr_lower_zf=gl_zf,
        rate_lower_mrc=None if gl_mrc is None else rate_from_sinr(gl_mrc),
        rate_lower_zf=None if gl_zf is None else rate_from_sinr(gl_zf),
    )
    for lo, hi in ((P_lo, P_hi), (E_lo, E_hi)):
        if np.any(lo > hi) or not np.all(np.isfinite(lo)) or np.any(lo < 0):
            raise AnalyticsError("bound pair violated lower <= upper or finiteness")
    return report


def benchmark_perfect_csi(config, stats, zeta):
    """Genie-CSI benchmark: no CE slot (carrier power = w), exact array gain.

    Returns (incident_power, rate_mrc, rate_zf); rate entries are None when
    the receiver's antenna precondition fails.
    """
    beta = np.asarray(stats.beta, dtype=float)
    delta = np.asarray(config.delta, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    p = config.w
    gain = zeta * (config.M - 1) + 1.0
    P = p * beta * gain
    s = p * delta * beta ** 2 * gain
    rate_mrc = None
    if config.R >= 2:
        g = s * (config.R - 1) / ((s.sum() - s) + config.noise_power)
        rate_mrc = rate_from_sinr(g)
    rate_zf = None
    if config.R >= config.K + 1:
        rate_zf = rate_from_sinr(s * (config.R - config.K) / config.noise_power)
    return P, rate_mrc, rate_zf


def benchmark_omni(config, stats, estimator, alpha, p_ce):
    """Omnidirectional benchmark: CE used only for detection, no energy beam."""
    from .scenario import carrier_power

    beta = np.asarray(stats.beta, dtype=float)
    delta = np.asarray(config.delta, dtype=float)
    s2 = config.noise_power
    p = carrier_power(config.w, config.T, alpha, p_ce)
    c = estimation_snr_recip(estimator, beta, alpha, p_ce, delta, s2, config.K)
    err = beta ** 2 * c
    phi_vals = ce_penalty(c)
    P = p * beta * (1.0 - (config.M - 1) / config.M * phi_vals)
    p_refl = delta * P
    rate_mrc = None
    if config.R >= 2:
        rate_mrc = rate_from_sinr(
            sinr_mrc(p_refl, beta, err, phi_vals, s2, config.tau, config.R))
    rate_zf = None
    if config.R >= config.K + 1:
        rate_zf = rate_from_sinr(
            sinr_zf(p_refl, beta, err, phi_vals, s2, config.tau, config.R, config.K))
    return P, rate_mrc, rate_zf

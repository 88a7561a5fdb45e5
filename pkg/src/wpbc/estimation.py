"""Pilot design, CE-slot reception, LS/MMSE backscatter estimators, and the
conditional forward-channel distribution used by the energy beamformer.

Tags reflect pilots one at a time, so each tag sees a pilot block of
D = alpha/K symbols; orthogonality requires D >= M.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Reference receive antenna (rows of H_hat) and transmit antenna (columns)
# used to extract forward/backward directions; any index gives identical
# statistics, so both are fixed to 0.
REF_RX = 0
REF_TX = 0


class EstimationError(ValueError):
    pass


@dataclass(frozen=True)
class PilotDesign:
    """Orthogonal pilot block: G (D,M) with G^H G = I, per-antenna power p_ce."""

    G: np.ndarray
    D: int
    p_ce: float

    @property
    def B(self):
        """Diagonal power loading, entries D * p_ce."""
        return self.D * self.p_ce * np.eye(self.G.shape[1])

    @property
    def sent(self):
        """Transmitted pilot matrix G B^(1/2), shape (D, M)."""
        return self.G * np.sqrt(self.D * self.p_ce)


@dataclass(frozen=True)
class EstimateSet:
    """Per-tag backscatter estimates: method, H_hat (K,R,M), err_var (K,)."""

    method: str
    H_hat: np.ndarray
    err_var: np.ndarray


@dataclass(frozen=True)
class ForwardPosterior:
    """Forward channel given one estimated row and its backward coefficient."""

    mean: np.ndarray
    cov_scalar: float  # covariance is cov_scalar * I_M


def build_pilots(M, D, p_ce):
    """First M columns of the size-D DFT basis, normalized to G^H G = I."""
    if D < M:
        raise EstimationError(f"pilot length D={D} must be >= M={M}")
    if p_ce <= 0:
        raise EstimationError(f"p_ce must be positive, got {p_ce}")
    t = np.arange(D)[:, None]
    m = np.arange(M)[None, :]
    G = np.exp(-2j * np.pi * t * m / D) / np.sqrt(D)
    return PilotDesign(G=G, D=int(D), p_ce=float(p_ce))


def simulate_ce_rx(real, k, pilots, delta_k, sigma2, rng):
    """Received CE block for tag k: sqrt(delta) H_k (G B^1/2)^T + noise, (R,D)."""
    from .channel import backscatter_matrix, _complex_normal

    H_k = backscatter_matrix(real, k)
    Y = np.sqrt(delta_k) * H_k @ pilots.sent.T
    if sigma2 > 0:
        Y = Y + _complex_normal(rng, Y.shape, sigma2)
    return Y


def ls_error_variance(sigma2, D, p_ce, delta_k):
    return sigma2 / (D * p_ce * delta_k)


def mmse_error_variance(sigma2, D, p_ce, delta_k, beta_k):
    return beta_k ** 2 / (1.0 + delta_k * beta_k ** 2 * D * p_ce / sigma2)


def estimate_ls(Y_k, pilots, delta_k, sigma2):
    """Least-squares inverse of the pilot block; unbiased, error CN(0, s2/(D p_ce delta))."""
    if delta_k <= 0:
        raise EstimationError("delta_k must be positive; a silent tag is unobservable")
    H_hat = Y_k @ np.conj(pilots.G) / np.sqrt(delta_k * pilots.D * pilots.p_ce)
    return H_hat, ls_error_variance(sigma2, pilots.D, pilots.p_ce, delta_k)


def mmse_shrinkage(sigma2, D, p_ce, delta_k, beta_k):
    """Factor turning the LS estimate into the linear-MMSE one."""
    x = delta_k * beta_k ** 2 * D * p_ce
    return x / (x + sigma2)


def estimate_mmse(Y_k, pilots, delta_k, beta_k, sigma2):
    """Linear MMSE estimate under the rank-1 prior (per-entry variance beta^2).

    Equals the LS estimate shrunk by delta*beta^2*D*p_ce/(delta*beta^2*D*p_ce + s2),
    which is the unique linear estimator whose per-entry error variance matches
    beta^2 / (1 + delta*beta^2*D*p_ce/s2).
    """
    if beta_k <= 0:
        raise EstimationError("beta_k must be positive")
    H_ls, _ = estimate_ls(Y_k, pilots, delta_k, sigma2)
    H_hat = mmse_shrinkage(sigma2, pilots.D, pilots.p_ce, delta_k, beta_k) * H_ls
    return H_hat, mmse_error_variance(sigma2, pilots.D, pilots.p_ce, delta_k, beta_k)


def estimate_all(Y, pilots, config, stats, method, sigma2):
    """Estimate every tag's backscatter matrix from stacked CE blocks (K,R,D)."""
    beta = np.asarray(stats.beta, dtype=float)
    H_hat = np.empty((config.K, config.R, config.M), dtype=complex)
    err = np.empty(config.K)
    for k in range(config.K):
        if method == "ls":
            H_hat[k], err[k] = estimate_ls(Y[k], pilots, config.delta[k], sigma2)
        elif method == "mmse":
            H_hat[k], err[k] = estimate_mmse(Y[k], pilots, config.delta[k], beta[k], sigma2)
        else:
            raise EstimationError(f"unknown estimator {method!r}")
    return EstimateSet(method=method, H_hat=H_hat, err_var=err)


def forward_error_var(method, h_kr_b, beta_k, sigma2, delta_k, alpha, p_ce, K):
    """Forward-channel error variance conditioned on one backward coefficient."""
    mag2 = abs(h_kr_b) ** 2
    if mag2 == 0:
        raise EstimationError("zero backward coefficient; forward channel unobservable")
    if method == "ls":
        return K * sigma2 / (mag2 * alpha * p_ce * delta_k)
    if method == "mmse":
        return beta_k ** 2 / (mag2 * (1.0 + delta_k * beta_k ** 2 * alpha * p_ce / (K * sigma2)))
    raise EstimationError(f"unknown estimator {method!r}")


def forward_posterior(h_hat_f, h_kr_b, beta_k, err_var):
    """Gaussian posterior of the true forward vector given its estimate.

    h_hat_f is the estimated forward direction (estimated row over h_kr_b);
    err_var is the backscatter-entry error variance of the estimator used.
    """
    mag2 = abs(h_kr_b) ** 2
    gain = mag2 * beta_k / (mag2 * beta_k + err_var)
    cov = beta_k * err_var / (mag2 * beta_k + err_var)
    return ForwardPosterior(mean=gain * np.asarray(h_hat_f), cov_scalar=cov)


def beamforming_vector(H_hat, zeta):
    """Energy beamformer: zeta-weighted sum of normalized estimated rows.

    H_hat is (K,R,M) or batched (...,K,R,M); returns (...,M).
    """
    rows = H_hat[..., REF_RX, :]
    norms = np.linalg.norm(rows, axis=-1, keepdims=True)
    weights = np.sqrt(np.asarray(zeta, dtype=float))[..., :, None]
    return (weights * np.conj(rows) / norms).sum(axis=-2)

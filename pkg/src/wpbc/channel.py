"""Seeded Rayleigh channel generation and backscatter-matrix composition.

Every draw is keyed by (seed, draw_index) through an independent SeedSequence,
so Monte Carlo results are bit-reproducible under any batching or scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Stream tags keeping channel draws and CE-slot noise on disjoint substreams.
_STREAM_CHANNEL = 0
_STREAM_CE_NOISE = 1


def rng_for(seed, *path):
    """Deterministic generator for one (seed, stream, index, ...) coordinate."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class ChannelRealization:
    """One block's channels: forward (K,M) and backward (K,R) complex arrays."""

    forward: np.ndarray
    backward: np.ndarray


def _complex_normal(rng, shape, variance):
    z = rng.standard_normal(shape + (2,))
    scale = np.sqrt(np.asarray(variance, dtype=float) / 2.0)
    return scale * (z[..., 0] + 1j * z[..., 1])


def draw_channels(config, stats, seed, draw_index):
    """Draw one i.i.d. block realization, CN(0, beta_k) per entry."""
    rng = rng_for(seed, _STREAM_CHANNEL, draw_index)
    beta = np.asarray(stats.beta, dtype=float)
    z = rng.standard_normal((config.K, config.M + config.R, 2))
    g = z[..., 0] + 1j * z[..., 1]
    scale = np.sqrt(beta / 2.0)[:, None]
    return ChannelRealization(forward=scale * g[:, : config.M],
                              backward=scale * g[:, config.M:])


def draw_channel_batch(config, stats, seed, start, count):
    """Stack `count` consecutive draws; entry j equals draw_channels(..., start+j)."""
    fwd = np.empty((count, config.K, config.M), dtype=complex)
    bwd = np.empty((count, config.K, config.R), dtype=complex)
    beta = np.asarray(stats.beta, dtype=float)
    scale = np.sqrt(beta / 2.0)[:, None]
    for j in range(count):
        rng = rng_for(seed, _STREAM_CHANNEL, start + j)
        z = rng.standard_normal((config.K, config.M + config.R, 2))
        g = z[..., 0] + 1j * z[..., 1]
        fwd[j] = scale * g[:, : config.M]
        bwd[j] = scale * g[:, config.M:]
    return fwd, bwd


def ce_noise_batch(config, pilot_len, noise_power, seed, start, count):
    """Receiver noise for the CE slot, (count,K,R,D) complex, same keying scheme."""
    out = np.empty((count, config.K, config.R, pilot_len), dtype=complex)
    for j in range(count):
        rng = rng_for(seed, _STREAM_CE_NOISE, start + j)
        out[j] = _complex_normal(rng, (config.K, config.R, pilot_len), noise_power)
    return out


def backscatter_matrix(real, k):
    """Rank-1 backscatter matrix of tag k: outer(h_k^b, h_k^f), shape (R, M)."""
    if not 0 <= k < real.forward.shape[0]:
        raise IndexError(f"tag index {k} out of range for K={real.forward.shape[0]}")
    return np.outer(real.backward[k], real.forward[k])


def backscatter_matrices(forward, backward):
    """Batched outer products: (..., K, R, M) from (..., K, M) and (..., K, R)."""
    return backward[..., :, None] * forward[..., None, :]

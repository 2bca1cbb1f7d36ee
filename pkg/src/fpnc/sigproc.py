"""Complex-baseband signal primitives.

Conventions: forward DFT is the unnormalized sum, the inverse carries the
1/N factor. AWGN variance is per complex sample (sigma^2/2 per real
dimension). All randomness flows through generators built by `make_rng`,
which splits a 64-bit master seed into independent per-task streams.
"""
from __future__ import annotations

import numpy as np


def make_rng(seed: int, *stream: int) -> np.random.Generator:
    """Deterministic generator for (seed, stream...) — independent streams
    for distinct stream tuples, bit-identical across runs."""
    entropy = (int(seed) & 0xFFFFFFFFFFFFFFFF,) + tuple(int(s) & 0xFFFFFFFF for s in stream)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def dft(x: np.ndarray, n_fft: int | None = None) -> np.ndarray:
    """Unnormalized forward DFT. If n_fft is given the input length must
    match exactly (no implicit padding)."""
    x = np.asarray(x)
    if n_fft is not None and len(x) != n_fft:
        raise ValueError(f"dft input length {len(x)} != configured N {n_fft}")
    return np.fft.fft(x)


def idft(spectrum: np.ndarray) -> np.ndarray:
    """Inverse DFT with 1/N normalization; exact inverse of `dft`."""
    return np.fft.ifft(np.asarray(spectrum))


def circular_convolve(x: np.ndarray, h: np.ndarray) -> np.ndarray:
    """N-point circular convolution y[n] = sum_k h[k] x[(n-k) mod N].

    Direct modular sum, independent of the DFT path (the DFT-multiply
    route is the test oracle for this function and vice versa).
    """
    x = np.asarray(x, dtype=complex)
    h = np.asarray(h, dtype=complex)
    if len(x) != len(h):
        raise ValueError(f"circular convolution needs equal lengths, got {len(x)} / {len(h)}")
    y = np.zeros(len(x), dtype=complex)
    for k in np.flatnonzero(h):
        y += h[k] * np.roll(x, k)
    return y


def linear_convolve(x: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Full linear convolution, output length len(x) + len(h) - 1."""
    h = np.asarray(h, dtype=complex)
    if len(h) == 0:
        raise ValueError("impulse response must be non-empty")
    return np.convolve(np.asarray(x, dtype=complex), h)


def add_awgn(x: np.ndarray, noise_variance: float, rng: np.random.Generator) -> np.ndarray:
    """Add circular complex Gaussian noise of the given per-sample variance."""
    if noise_variance < 0:
        raise ValueError(f"noise variance must be >= 0, got {noise_variance}")
    x = np.asarray(x, dtype=complex)
    if noise_variance == 0:
        return x.copy()
    scale = np.sqrt(noise_variance / 2.0)
    noise = scale * (rng.standard_normal(len(x)) + 1j * rng.standard_normal(len(x)))
    return x + noise


def noise_variance_for_snr_db(snr_db: float) -> float:
    """Per-sample noise variance for a unit-power received signal.

    SNR convention used throughout: per-sample power of a single-user
    unit-gain frame (training sections are normalized to unit average
    power) divided by the complex noise variance.
    """
    return float(10.0 ** (-snr_db / 10.0))

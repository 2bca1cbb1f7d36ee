"""Uplink impairment model: per-node multipath taps, arrival offset,
per-node carrier frequency offset, AWGN.

Time origin is the earlier node's (A's) first path; B's extra arrival
delay is folded into its tap vector as leading zero delay. CFO phi is
radians of phase advance per sample, applied as exp(+j*n*phi) on the
absolute receive index n.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .sigproc import add_awgn, linear_convolve


class CpViolationWarning(UserWarning):
    """Delay spread exceeds the cyclic prefix; subcarrier isolation is not
    guaranteed. Surfaced (not raised) so negative-control runs can proceed."""


@dataclass(frozen=True)
class ChannelTaps:
    """Finite impulse response; `first_index` encodes pure delay.

    The delay spread D of a tap set is first_index + len(gains), i.e. the
    index one past the last (nonzero) tap.
    """

    gains: tuple[complex, ...]
    first_index: int = 0

    def __post_init__(self):
        if len(self.gains) == 0:
            raise ValueError("channel needs at least one tap")
        if self.gains[-1] == 0:
            raise ValueError("last tap must be nonzero (fold trailing zeros into length)")
        if self.first_index < 0:
            raise ValueError("first_index must be >= 0")
        object.__setattr__(self, "gains", tuple(complex(g) for g in self.gains))

    @property
    def span(self) -> int:
        """Delay spread D = index of the last nonzero tap + 1."""
        return self.first_index + len(self.gains)

    def shifted(self, extra_delay: int) -> "ChannelTaps":
        return ChannelTaps(self.gains, self.first_index + extra_delay)

    def dense(self, length: int | None = None) -> np.ndarray:
        """Tap vector with the leading delay made explicit, optionally
        zero-padded to `length` (e.g. the FFT size)."""
        n = self.span if length is None else length
        if n < self.span:
            raise ValueError(f"length {n} cannot hold taps spanning {self.span}")
        h = np.zeros(n, dtype=complex)
        h[self.first_index : self.span] = self.gains
        return h

    @staticmethod
    def flat() -> "ChannelTaps":
        return ChannelTaps((1.0 + 0.0j,))


def delay_spread(taps_a: ChannelTaps, taps_b: ChannelTaps) -> int:
    """Combined delay spread max(D_A, D_B), both counted from A's first path."""
    return max(taps_a.span, taps_b.span)


@dataclass(frozen=True)
class CfoSpec:
    """Normalized carrier frequency offset: radians per sample."""

    phi: float = 0.0

    @staticmethod
    def max_phi(n_fft: int) -> float:
        """Shipped-configuration cap keeping the angle-difference estimate
        unambiguous (integer wrap term = 0)."""
        return 2.0 * np.pi * 0.2 / n_fft


@dataclass(frozen=True)
class UplinkScenario:
    taps_a: ChannelTaps
    taps_b: ChannelTaps
    offset_b: int = 0
    cfo_a: CfoSpec = CfoSpec(0.0)
    cfo_b: CfoSpec = CfoSpec(0.0)
    noise_variance: float = 0.0

    def __post_init__(self):
        if self.offset_b < 0:
            raise ValueError("offset_b must be >= 0 (A arrives first by convention)")
        if self.noise_variance < 0:
            raise ValueError("noise variance must be >= 0")

    def effective_taps_b(self) -> ChannelTaps:
        """B's taps with the arrival offset folded into the leading delay."""
        return self.taps_b.shifted(self.offset_b)

    def combined_delay_spread(self) -> int:
        return delay_spread(self.taps_a, self.effective_taps_b())


def apply_channel(x: np.ndarray, taps: ChannelTaps) -> np.ndarray:
    """Linear convolution with the dense tap vector; the output keeps the
    input's time origin (delay is part of the taps)."""
    return linear_convolve(x, taps.dense())


def apply_cfo(x: np.ndarray, cfo: CfoSpec, start_index: int = 0) -> np.ndarray:
    """Rotate sample n (absolute receive index) by exp(+j*n*phi)."""
    x = np.asarray(x, dtype=complex)
    if cfo.phi == 0.0:
        return x.copy()
    n = start_index + np.arange(len(x))
    return x * np.exp(1j * cfo.phi * n)


def superpose_uplink(
    frame_a: np.ndarray,
    frame_b: np.ndarray,
    scenario: UplinkScenario,
    rng: np.random.Generator,
    cp_len: int = 16,
) -> np.ndarray:
    """Received uplink superposition: channel, offset and CFO per node,
    then AWGN. The shorter contribution is zero-extended."""
    spread = scenario.combined_delay_spread()
    if spread > cp_len:
        warnings.warn(
            f"delay spread {spread} exceeds CP length {cp_len}; "
            "per-subcarrier alignment is not guaranteed",
            CpViolationWarning,
            stacklevel=2,
        )
    ya = apply_cfo(apply_channel(frame_a, scenario.taps_a), scenario.cfo_a)
    yb = apply_cfo(apply_channel(frame_b, scenario.effective_taps_b()), scenario.cfo_b)
    n = max(len(ya), len(yb))
    y = np.zeros(n, dtype=complex)
    y[: len(ya)] += ya
    y[: len(yb)] += yb
    return add_awgn(y, scenario.noise_variance, rng)


# Phase advance of a repeating glitch across one training unit: a burst
# just off the half-unit-rate harmonic. Products of unit-spaced samples
# then carry a consistent ~166 degree angle (an outlier with a definite
# sign, which biases a mean estimate), while the two-unit average of the
# pair nearly cancels, leaving channel estimates intact.
GLITCH_REPEAT_PHASE = 2.9


def inject_outliers(
    x: np.ndarray,
    regions: list[tuple[int, int]],
    count: int,
    amplitude: float,
    pair_shift: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Add `count` repeating glitch pairs inside the training regions.

    Each glitch is an impulse at n0 repeated at n0+pair_shift (one
    training unit later) rotated by GLITCH_REPEAT_PHASE. This is the
    training-field corruption that separates median from mean
    frequency-offset estimation.
    """
    y = np.asarray(x, dtype=complex).copy()
    if count <= 0:
        return y
    positions = [n for lo, hi in regions for n in range(max(lo, 0), min(hi, len(y) - pair_shift))]
    if not positions:
        raise ValueError(f"empty outlier regions {regions}")
    chosen = rng.choice(len(positions), size=min(count, len(positions)), replace=False)
    for i in chosen:
        n0 = positions[int(i)]
        glitch = amplitude * np.exp(2j * np.pi * rng.random())
        y[n0] += glitch
        y[n0 + pair_shift] += glitch * np.exp(1j * GLITCH_REPEAT_PHASE)
    return y

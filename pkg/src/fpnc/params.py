"""OFDM numerology and node roles.

802.11a/g-style 64-subcarrier layout: 48 data subcarriers, 4 pilot
positions, DC and the band edges unused. The four pilot positions are
split between the two uplink nodes so that each node's pilots are nulled
in the other node's symbols.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class NodeRole(enum.Enum):
    A = "A"
    B = "B"
    RELAY = "relay"


# 802.11a occupied band: subcarriers -26..-1 and 1..26 (DC unused).
OCCUPIED_SUBCARRIERS = tuple(k for k in range(-26, 27) if k != 0)
PILOT_SUBCARRIERS = (-21, -7, 7, 21)


@dataclass(frozen=True)
class OfdmParams:
    """Static per-link OFDM configuration.

    Subcarrier indices are logical (signed, DC = 0); use `bin_of` to map
    to FFT bin order.
    """

    n_fft: int = 64
    cp_len: int = 16
    occupied: tuple[int, ...] = OCCUPIED_SUBCARRIERS
    pilots_a: tuple[int, int] = (-21, 7)
    pilots_b: tuple[int, int] = (-7, 21)
    data_subcarriers: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        if self.n_fft <= 0 or self.n_fft & (self.n_fft - 1):
            raise ValueError(f"n_fft must be a power of two, got {self.n_fft}")
        if not 0 < self.cp_len <= self.n_fft:
            raise ValueError(f"cp_len must be in 1..n_fft, got {self.cp_len}")
        if set(self.pilots_a) & set(self.pilots_b):
            raise ValueError("pilot sets of the two nodes must be disjoint")
        pilots = set(self.pilots_a) | set(self.pilots_b)
        if not pilots <= set(self.occupied):
            raise ValueError("pilot subcarriers must lie in the occupied band")
        data = tuple(k for k in self.occupied if k not in pilots)
        object.__setattr__(self, "data_subcarriers", data)

    @property
    def n_data_subcarriers(self) -> int:
        return len(self.data_subcarriers)

    @property
    def symbol_len(self) -> int:
        return self.n_fft + self.cp_len

    def bin_of(self, k: int) -> int:
        """FFT bin for logical subcarrier k (negative k wrap to the top)."""
        return k % self.n_fft

    def bins(self, subcarriers) -> np.ndarray:
        return np.asarray([self.bin_of(k) for k in subcarriers], dtype=np.intp)

    def pilots_of(self, role: NodeRole) -> tuple[int, int]:
        """Pilot subcarriers owned by a transmitter role.

        The relay's downlink frames reuse role A's slots and pilots.
        """
        if role in (NodeRole.A, NodeRole.RELAY):
            return self.pilots_a
        return self.pilots_b

    def occupied_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_fft, dtype=bool)
        mask[self.bins(self.occupied)] = True
        return mask

"""Transmit frame assembly: preamble (STS, role-slotted LTS, nulled pilots)
and BPSK/OFDM data symbols.

Frame timeline (sample indices relative to frame start, defaults N=64 C=16):

    [0,160)     STS: 10 identical 16-sample units (both nodes send it)
    [160,448)   LTS field, 288 samples, time-orthogonal between roles:
                  role A: CP(16) unit(64) unit(64) zeros(144)
                  role B: zeros(144) CP(16) unit(64) unit(64)
    [448,...)   data symbols, each CP(16) + payload(64)

The LTS CP is 16 samples (not the 32 of a conventional preamble) so that
the late node's training units stay clear of the early node's data region
for any arrival offset within the CP.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coding import N_TAIL, bpsk_map, conv_encode
from .params import NodeRole, OfdmParams
from .sigproc import dft, idft

N_STS_UNITS = 10
N_LTS_UNITS = 2

# Frequency-domain short training sequence: 12 tones on multiples of 4,
# amplitude sqrt(13/6)*(+-1 +-j), which makes the time signal 16-periodic.
_STS_TONES = {
    4: -1 - 1j, 8: -1 - 1j, 12: 1 + 1j, 16: 1 + 1j, 20: 1 + 1j, 24: 1 + 1j,
    -4: 1 + 1j, -8: -1 - 1j, -12: -1 - 1j, -16: 1 + 1j, -20: -1 - 1j, -24: 1 + 1j,
}

# Frequency-domain long training sequence (subcarriers -26..-1, 1..26).
_LTS_NEG = [1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1]
_LTS_POS = [1, -1, -1, 1, 1, -1, 1, -1, 1, -1, -1, -1, -1, -1, 1, 1, -1, -1, 1, -1, 1, -1, 1, 1, 1, 1]


def lts_reference(params: OfdmParams) -> np.ndarray:
    """+-1 long-training spectrum over FFT bins (zeros off the occupied band)."""
    ref = np.zeros(params.n_fft, dtype=complex)
    for i, k in enumerate(range(-26, 0)):
        ref[params.bin_of(k)] = _LTS_NEG[i]
    for i, k in enumerate(range(1, 27)):
        ref[params.bin_of(k)] = _LTS_POS[i]
    return ref


def _sts_spectrum(params: OfdmParams) -> np.ndarray:
    spec = np.zeros(params.n_fft, dtype=complex)
    amp = np.sqrt(13.0 / 6.0)
    for k, v in _STS_TONES.items():
        spec[params.bin_of(k)] = amp * v
    return spec


def symbol_scale(params: OfdmParams) -> float:
    """Amplitude applied to every LTS/data symbol spectrum.

    Chosen so one LTS unit has exactly unit average sample power. Data
    symbols use the same scale, so channel estimates taken against a +-1
    LTS reference apply to data subcarriers without rescaling.
    """
    return params.n_fft / np.sqrt(len(params.occupied))


def sts_unit(params: OfdmParams) -> np.ndarray:
    """One 16-sample STS unit, normalized to unit average power."""
    period = params.n_fft // 4
    unit = idft(_sts_spectrum(params))[:period]
    return unit / np.sqrt(np.mean(np.abs(unit) ** 2))


def gen_sts(params: OfdmParams) -> np.ndarray:
    """Short training field: 10 identical units, 160 samples by default."""
    return np.tile(sts_unit(params), N_STS_UNITS)


def lts_unit(params: OfdmParams) -> np.ndarray:
    """One 64-sample LTS unit (unit average power by construction)."""
    return idft(lts_reference(params) * symbol_scale(params))


def lts_field_len(params: OfdmParams) -> int:
    return 2 * (params.cp_len + N_LTS_UNITS * params.n_fft)


def gen_lts(role: NodeRole, params: OfdmParams) -> np.ndarray:
    """Role-slotted long training field.

    Role A transmits CP + two units then silence; role B mirrors it. The
    relay has no uplink LTS slot of its own.
    """
    if role == NodeRole.RELAY:
        raise ValueError("LTS slots are defined for uplink roles A and B only")
    unit = lts_unit(params)
    burst = np.concatenate([unit[-params.cp_len:], unit, unit])
    silence = np.zeros(len(burst), dtype=complex)
    if role == NodeRole.A:
        return np.concatenate([burst, silence])
    return np.concatenate([silence, burst])


def gen_pilots(role: NodeRole, symbol_index: int, params: OfdmParams) -> dict[int, complex]:
    """Pilot map for one OFDM symbol: +1 on the role's own pilot
    subcarriers, 0 on the partner's (constant polarity, no scrambling)."""
    own = params.pilots_of(role)
    other = params.pilots_b if own == params.pilots_a else params.pilots_a
    pilots = {k: 1.0 + 0.0j for k in own}
    pilots.update({k: 0.0j for k in other})
    return pilots


@dataclass(frozen=True)
class FrameLayout:
    """Sample-index map of one transmitted frame.

    Spans are half-open (start, stop) ranges from the frame's first
    sample. The two LTS slots exist in every frame; the transmitter role
    decides which one carries energy. `payload_bits` is the caller's
    unpadded message length; error counting must ignore the
    `padded_bits - payload_bits` zero fill.
    """

    sts_span: tuple[int, int]
    lts_span_a: tuple[int, int]
    lts_span_b: tuple[int, int]
    data_symbol_spans: tuple[tuple[tuple[int, int], tuple[int, int]], ...]
    total_len: int
    payload_bits: int
    padded_bits: int
    coded: bool

    @property
    def n_symbols(self) -> int:
        return len(self.data_symbol_spans)


def padded_payload_len(n_bits: int, params: OfdmParams, coded: bool) -> int:
    """Smallest padded message length filling whole OFDM symbols."""
    per_symbol = params.n_data_subcarriers
    if coded:
        # coded length 2*(L+6) must be a multiple of the per-symbol bits
        block = per_symbol // 2
        total = -(-(n_bits + N_TAIL) // block) * block
        return total - N_TAIL
    return -(-n_bits // per_symbol) * per_symbol


def data_symbol_count(n_bits: int, params: OfdmParams, coded: bool) -> int:
    padded = padded_payload_len(n_bits, params, coded)
    total = 2 * (padded + N_TAIL) if coded else padded
    return total // params.n_data_subcarriers


def modulate_symbol(
    bits: np.ndarray, role: NodeRole, symbol_index: int, params: OfdmParams
) -> np.ndarray:
    """One CP+payload OFDM symbol from one symbol's worth of coded bits."""
    if len(bits) != params.n_data_subcarriers:
        raise ValueError(f"need {params.n_data_subcarriers} bits per symbol, got {len(bits)}")
    spec = np.zeros(params.n_fft, dtype=complex)
    spec[params.bins(params.data_subcarriers)] = bpsk_map(bits)
    for k, v in gen_pilots(role, symbol_index, params).items():
        spec[params.bin_of(k)] = v
    payload = idft(spec * symbol_scale(params))
    return np.concatenate([payload[-params.cp_len:], payload])


def build_frame(
    role: NodeRole,
    payload: np.ndarray,
    params: OfdmParams,
    coded: bool = True,
) -> tuple[np.ndarray, FrameLayout]:
    """Assemble STS + LTS(role) + data symbols from source bits.

    The payload is zero-padded to a whole number of OFDM symbols; the
    layout records both lengths. The relay's downlink frames use role A's
    LTS slot and pilots.
    """
    payload = np.asarray(payload, dtype=np.uint8)
    if payload.size == 0:
        raise ValueError("payload must contain at least one bit")
    padded_len = padded_payload_len(len(payload), params, coded)
    padded = np.concatenate([payload, np.zeros(padded_len - len(payload), np.uint8)])
    line_bits = conv_encode(padded) if coded else padded

    lts_role = NodeRole.A if role == NodeRole.RELAY else role
    sts = gen_sts(params)
    lts = gen_lts(lts_role, params)
    per_symbol = params.n_data_subcarriers
    n_symbols = len(line_bits) // per_symbol
    symbols = [
        modulate_symbol(line_bits[i * per_symbol : (i + 1) * per_symbol], lts_role, i, params)
        for i in range(n_symbols)
    ]
    signal = np.concatenate([sts, lts] + symbols)

    sts_len, lts_len = len(sts), len(lts)
    half = lts_len // 2
    burst_a = (sts_len, sts_len + half)
    burst_b = (sts_len + half, sts_len + lts_len)
    spans = []
    pos = sts_len + lts_len
    for _ in range(n_symbols):
        spans.append(((pos, pos + params.cp_len), (pos + params.cp_len, pos + params.symbol_len)))
        pos += params.symbol_len
    layout = FrameLayout(
        sts_span=(0, sts_len),
        lts_span_a=burst_a,
        lts_span_b=burst_b,
        data_symbol_spans=tuple(spans),
        total_len=pos,
        payload_bits=len(payload),
        padded_bits=padded_len,
        coded=coded,
    )
    return signal, layout


def save_complex_vector(path, values: np.ndarray, header: str = "") -> None:
    """Write a complex vector as plain text, one "re im" pair per line."""
    with open(path, "w") as fh:
        if header:
            for line in header.strip().splitlines():
                fh.write(f"# {line}\n")
        for v in np.asarray(values, dtype=complex):
            fh.write(f"{v.real:.18e} {v.imag:.18e}\n")


def load_complex_vector(path) -> np.ndarray:
    """Read a complex vector stored by `save_complex_vector`."""
    values = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            re_s, im_s = line.split()
            values.append(complex(float(re_s), float(im_s)))
    return np.asarray(values, dtype=complex)

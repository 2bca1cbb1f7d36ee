"""Rate-1/2 convolutional codec (K=7, generators 133/171 octal) and BPSK.

The encoder is zero-tail terminated, so the code is linear over GF(2):
encode(a) xor encode(b) == encode(a xor b). That identity is what lets the
relay decode the XOR of two messages with a stock Viterbi decoder.
"""
from __future__ import annotations

import numpy as np

CONSTRAINT_LEN = 7
N_TAIL = CONSTRAINT_LEN - 1
_G0 = np.array([1, 0, 1, 1, 0, 1, 1], dtype=np.uint8)  # 133 octal
_G1 = np.array([1, 1, 1, 1, 0, 0, 1], dtype=np.uint8)  # 171 octal
_NSTATES = 1 << N_TAIL


def conv_encode(bits: np.ndarray) -> np.ndarray:
    """Encode with zero-tail termination; output length 2*(len(bits)+6)."""
    b = np.concatenate([np.asarray(bits, dtype=np.uint8) & 1, np.zeros(N_TAIL, np.uint8)])
    c0 = np.convolve(b, _G0)[: len(b)] & 1
    c1 = np.convolve(b, _G1)[: len(b)] & 1
    out = np.empty(2 * len(b), dtype=np.uint8)
    out[0::2] = c0
    out[1::2] = c1
    return out


def _transition_tables():
    # state = previous 6 input bits, most recent in bit 5
    s = np.arange(_NSTATES)
    reg = np.empty((_NSTATES, CONSTRAINT_LEN), np.uint8)
    for i in range(N_TAIL):
        reg[:, i + 1] = (s >> (N_TAIL - 1 - i)) & 1
    out = np.empty((_NSTATES, 2), np.int64)
    for b in (0, 1):
        reg[:, 0] = b
        out[:, b] = ((reg @ _G0 & 1).astype(np.int64) << 1) | (reg @ _G1 & 1)
    pred = np.empty((_NSTATES, 2), np.intp)
    pred[:, 0] = (s & (_NSTATES // 2 - 1)) << 1
    pred[:, 1] = pred[:, 0] + 1
    pbit = (s >> (N_TAIL - 1)).astype(np.int64)  # input bit that leads into state s
    branch_sym = out[pred, pbit[:, None]]        # symbol emitted on pred -> s
    return pred, branch_sym


_PRED, _BRANCH_SYM = _transition_tables()
_HAMMING2 = np.array([[0, 1, 1, 2], [1, 0, 2, 1], [1, 2, 0, 1], [2, 1, 1, 0]], np.int64)


def viterbi_decode(coded: np.ndarray) -> np.ndarray:
    """Hard-decision ML decode of a zero-tail-terminated rate-1/2 codeword.

    Returns the message without the 6 tail bits. Input length must be an
    even number covering at least the tail.
    """
    coded = np.asarray(coded, dtype=np.uint8) & 1
    if len(coded) % 2 or len(coded) < 2 * N_TAIL + 2:
        raise ValueError(f"codeword length {len(coded)} not a valid terminated rate-1/2 length")
    n_steps = len(coded) // 2
    rx = (coded[0::2].astype(np.intp) << 1) | coded[1::2]
    branch = _HAMMING2[rx][:, _BRANCH_SYM]  # (n_steps, 64, 2)

    big = np.int64(1) << 40
    metric = np.full(_NSTATES, big, np.int64)
    metric[0] = 0
    decisions = np.empty((n_steps, _NSTATES), np.uint8)
    rows = np.arange(_NSTATES)
    for t in range(n_steps):
        cand = metric[_PRED] + branch[t]
        choice = (cand[:, 1] < cand[:, 0]).astype(np.uint8)
        decisions[t] = choice
        metric = cand[rows, choice]

    state = 0  # zero tail drives the encoder back to state 0
    bits = np.empty(n_steps, np.uint8)
    for t in range(n_steps - 1, -1, -1):
        bits[t] = state >> (N_TAIL - 1)
        state = _PRED[state, decisions[t, state]]
    return bits[: n_steps - N_TAIL]


def bpsk_map(bits: np.ndarray) -> np.ndarray:
    """bit 0 -> +1, bit 1 -> -1 (symbol product of two users encodes XOR)."""
    return 1.0 - 2.0 * np.asarray(bits, dtype=np.float64)


def bpsk_demap(symbols: np.ndarray) -> np.ndarray:
    """Hard decisions back to bits; the decision boundary is Re = 0."""
    return (np.real(np.asarray(symbols)) < 0).astype(np.uint8)

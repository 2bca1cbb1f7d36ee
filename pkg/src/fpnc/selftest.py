"""Built-in signal-path checks: fast noiseless assertions runnable from
the CLI without the test suite installed."""
from __future__ import annotations

import numpy as np

from .channel import CfoSpec, ChannelTaps, UplinkScenario, superpose_uplink
from .coding import conv_encode, viterbi_decode
from .endnode import extract_partner, p2p_receive
from .experiments import SweepConfig, run_fpnc_trial
from .frame import build_frame
from .params import NodeRole, OfdmParams
from .relay import ReceiverConfig, relay_receive
from .sigproc import add_awgn, circular_convolve, dft, idft, linear_convolve, make_rng


def _check_convolution_theorem(rng) -> bool:
    for _ in range(20):
        x = rng.standard_normal(64) + 1j * rng.standard_normal(64)
        h = rng.standard_normal(64) + 1j * rng.standard_normal(64)
        lhs = dft(circular_convolve(x, h))
        rhs = dft(x) * dft(h)
        if np.max(np.abs(lhs - rhs)) > 1e-9 * np.max(np.abs(rhs)):
            return False
    return True


def _check_cp_circularization(rng) -> bool:
    n, c = 64, 16
    for _ in range(20):
        x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        h = np.zeros(c, dtype=complex)
        taps = rng.integers(1, c, endpoint=True)
        h[:taps] = rng.standard_normal(taps) + 1j * rng.standard_normal(taps)
        if h[taps - 1] == 0:
            h[taps - 1] = 1.0
        with_cp = np.concatenate([x[-c:], x])
        y = linear_convolve(with_cp, h[:taps])[c : c + n]
        ref = circular_convolve(x, np.concatenate([h[:taps], np.zeros(n - taps)]))
        if np.max(np.abs(y - ref)) > 1e-9 * max(np.max(np.abs(ref)), 1.0):
            return False
    return True


def _check_codec(rng) -> bool:
    msg = rng.integers(0, 2, 200).astype(np.uint8)
    if not np.array_equal(viterbi_decode(conv_encode(msg)), msg):
        return False
    a = rng.integers(0, 2, 128).astype(np.uint8)
    b = rng.integers(0, 2, 128).astype(np.uint8)
    return np.array_equal(conv_encode(a) ^ conv_encode(b), conv_encode(a ^ b))


def _check_noiseless_exchange(rng, offset: int, two_tap: bool) -> bool:
    params = OfdmParams()
    payload_a = rng.integers(0, 2, 400).astype(np.uint8)
    payload_b = rng.integers(0, 2, 400).astype(np.uint8)
    if two_tap:
        taps_a = ChannelTaps((0.9 + 0.1j, 0.3 - 0.2j))
        span_b = max(0, params.cp_len - 1 - offset)
        taps_b = ChannelTaps((0.8 - 0.3j, 0.25j)) if span_b >= 1 else ChannelTaps.flat()
    else:
        taps_a = taps_b = ChannelTaps.flat()
    scenario = UplinkScenario(
        taps_a=taps_a, taps_b=taps_b, offset_b=offset,
        cfo_a=CfoSpec(0.004), cfo_b=CfoSpec(-0.003), noise_variance=0.0,
    )
    frame_a, _ = build_frame(NodeRole.A, payload_a, params)
    frame_b, _ = build_frame(NodeRole.B, payload_b, params)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        y = superpose_uplink(frame_a, frame_b, scenario, rng, cp_len=params.cp_len)
    cfg = ReceiverConfig(payload_bits=400)
    try:
        xor_frame, _ = relay_receive(y, params, cfg)
    except Exception:
        return False
    truth = payload_a ^ payload_b
    if not np.array_equal(xor_frame.xor_source_bits, truth):
        return False
    out = p2p_receive(xor_frame.downlink_signal, NodeRole.RELAY, params, cfg)
    if not out.sync_ok:
        return False
    recovered_b = extract_partner(out.decoded_bits, payload_a)
    return np.array_equal(recovered_b, payload_b)


def run_selftest(verbose: bool = False) -> bool:
    rng = make_rng(2024)
    checks = [
        ("convolution theorem (DFT of circular conv = product)", _check_convolution_theorem(rng)),
        ("cyclic prefix circularizes the channel", _check_cp_circularization(rng)),
        ("codec roundtrip and GF(2) linearity", _check_codec(rng)),
    ]
    for offset in (0, 8, 16):
        ok = _check_noiseless_exchange(rng, offset, two_tap=True)
        checks.append((f"noiseless zero-error exchange, offset {offset}", ok))
    all_ok = all(ok for _, ok in checks)
    if verbose:
        for name, ok in checks:
            print(f"{'PASS' if ok else 'FAIL'}  {name}")
        print("selftest:", "all checks passed" if all_ok else "FAILURES above")
    return all_ok

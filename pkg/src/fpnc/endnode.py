"""Single-user OFDM receiver: downlink reception at the end nodes and the
uplink slots of the time-scheduled baseline schemes, plus self-information
XOR extraction.

Degenerate single-user case of the relay chain: one set of STS peaks, one
CFO, one channel, the transmitter role picking the LTS slot and pilots.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coding import viterbi_decode
from .frame import data_symbol_count, lts_reference, lts_unit, sts_unit
from .params import NodeRole, OfdmParams
from .relay import (
    CfoEstimate,
    ChannelEstimate,
    ReceiverConfig,
    SyncError,
    SyncResult,
    _boundary_metric,
    _correlation_profile,
    _frame_offsets,
    _select_peaks,
    _unit_estimate,
    compensate_cfo,
    estimate_cfo_one,
    track_channel,
)
from .sigproc import dft


@dataclass
class P2pReceiverOutput:
    decoded_bits: np.ndarray
    sync_ok: bool
    phi_hat: float = 0.0
    channel: np.ndarray | None = None


def _single_user_sync(
    y: np.ndarray, role: NodeRole, params: OfdmParams, threshold: float
) -> SyncResult:
    """Timing for one transmitter: last verified STS peak marks the frame.

    The transmitter role decides which LTS slot carries the verification
    waveform; both boundaries collapse onto the same peak.
    """
    unit = sts_unit(params)
    L = len(unit)
    search_end = 10 * L - L + params.cp_len
    if len(y) < search_end + L + 2:
        raise SyncError("receive buffer too short for timing search")
    z = _correlation_profile(y, unit, search_end)
    peaks = _select_peaks(z, threshold, search_end, L)
    if len(peaks) < 10:
        raise SyncError(f"only {len(peaks)} correlation peaks (need >= 10)")
    own_u1, partner_u1, _ = _frame_offsets(params)
    shift = own_u1 if role in (NodeRole.A, NodeRole.RELAY) else partner_u1
    lts = lts_unit(params)
    # nominal train end first (trailing peaks can be boundary artifacts
    # or multipath echoes), then the detected tail
    candidates = [peaks[0] + 9 * L] + list(reversed(peaks[-5:]))
    seen = set()
    for p in candidates:
        if p in seen or p > search_end:
            continue
        seen.add(p)
        if _boundary_metric(y, p + shift, lts) >= 0.25:
            return SyncResult(
                peak_indices=tuple(peaks),
                lts_boundary_a=p + own_u1,
                lts_boundary_b=p + partner_u1,
                detected_offset=0,
            )
    raise SyncError("no STS peak verified against the LTS waveform")


def p2p_receive(
    y: np.ndarray,
    role: NodeRole,
    params: OfdmParams,
    cfg: ReceiverConfig,
) -> P2pReceiverOutput:
    """Receive one single-user frame transmitted by `role`.

    Sync failure returns sync_ok=False with no decoded bits rather than
    raising; a lost frame is an ordinary counted outcome here.
    """
    try:
        sync = cfg.genie_sync or _single_user_sync(y, role, params, cfg.sync_threshold)
    except SyncError:
        return P2pReceiverOutput(decoded_bits=np.empty(0, np.uint8), sync_ok=False)

    n = params.n_fft
    slot_role = NodeRole.A if role == NodeRole.RELAY else role
    u1 = sync.lts_boundary_a if slot_role == NodeRole.A else sync.lts_boundary_b
    try:
        phi = estimate_cfo_one(y[u1:], n, cfg.cfo_estimator)
        y = compensate_cfo(y, "a_only", CfoEstimate(phi_hat_a=phi, phi_hat_b=phi))

        ref = lts_reference(params)
        occ = params.bins(params.occupied)
        h1 = _unit_estimate(y, u1, ref, occ, n)
        h2 = _unit_estimate(y, u1 + n, ref, occ, n)
        base = ChannelEstimate(gains=(h1 + h2) / 2.0, node=slot_role)

        n_symbols = data_symbol_count(cfg.payload_bits, params, cfg.coded)
        _, _, data0 = _frame_offsets(params)
        anchor = sync.lts_boundary_a - (params.n_fft // 4 + params.cp_len)
        payload0 = anchor + data0
        if payload0 + n_symbols * params.symbol_len - params.cp_len > len(y):
            raise SyncError("data region extends past the receive buffer")

        data_bins = params.bins(params.data_subcarriers)
        line_bits = np.empty(n_symbols * params.n_data_subcarriers, np.uint8)
        for m in range(n_symbols):
            start = payload0 + m * params.symbol_len
            spec = dft(y[start : start + n])
            h_m = track_channel(spec, base, slot_role, params, m)
            equalized = spec[data_bins] / h_m.gains[data_bins]
            line_bits[m * len(data_bins) : (m + 1) * len(data_bins)] = (
                equalized.real < 0
            ).astype(np.uint8)
    except SyncError:
        return P2pReceiverOutput(decoded_bits=np.empty(0, np.uint8), sync_ok=False)

    decoded = viterbi_decode(line_bits) if cfg.coded else line_bits
    return P2pReceiverOutput(
        decoded_bits=decoded[: cfg.payload_bits],
        sync_ok=True,
        phi_hat=phi,
        channel=base.gains,
    )


def extract_partner(xor_bits: np.ndarray, own_bits: np.ndarray) -> np.ndarray:
    """Recover the partner's packet from the network-coded packet using
    the node's own transmitted bits."""
    xor_bits = np.asarray(xor_bits, dtype=np.uint8)
    own_bits = np.asarray(own_bits, dtype=np.uint8)
    if xor_bits.shape != own_bits.shape:
        raise ValueError(f"length mismatch: {xor_bits.shape} vs {own_bits.shape}")
    return xor_bits ^ own_bits

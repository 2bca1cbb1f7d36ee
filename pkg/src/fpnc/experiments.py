"""Monte Carlo harness: FPNC / SNC / TS trial runners, error-rate
aggregation with confidence intervals, slot-count throughput.

Scheme slot budgets for one packet exchange: FPNC 2, straightforward
network coding 3, traditional scheduling 4. Frame errors for FPNC and SNC
are counted on the XOR of the two source frames; TS contributes plain
point-to-point frame errors, which also serve as the shared downlink
error estimate in the throughput formulas.

Every trial owns an independent deterministic random stream keyed by
(seed, scheme, snr, offset, coded, trial), so results do not depend on
execution order or worker count.
"""
from __future__ import annotations

import enum
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import (
    CfoSpec,
    ChannelTaps,
    CpViolationWarning,
    UplinkScenario,
    apply_cfo,
    apply_channel,
    inject_outliers,
    superpose_uplink,
)
from .endnode import extract_partner, p2p_receive
from .frame import build_frame
from .params import NodeRole, OfdmParams
from .relay import ReceiverConfig, SyncError, ground_truth_sync, relay_receive
from .sigproc import add_awgn, make_rng, noise_variance_for_snr_db


class SchemeId(enum.Enum):
    FPNC = "fpnc"
    SNC = "snc"
    TS = "ts"

    @property
    def slots(self) -> int:
        return {SchemeId.FPNC: 2, SchemeId.SNC: 3, SchemeId.TS: 4}[self]


@dataclass(frozen=True)
class SweepConfig:
    """Everything needed to reproduce a sweep byte-for-byte."""

    snr_db: tuple[float, ...]
    offsets: tuple[int, ...] = (0,)
    trials: int = 500
    seed: int = 0
    payload_bytes: int = 125
    coded: bool = True
    schemes: tuple[SchemeId, ...] = (SchemeId.FPNC, SchemeId.SNC, SchemeId.TS)
    channel_mode: str = "two_tap_random"  # flat | fixed | two_tap_random
    taps_a: tuple[complex, ...] = (1.0 + 0.0j,)
    taps_b: tuple[complex, ...] = (1.0 + 0.0j,)
    max_tap_span: int = 6
    cfo_a: float = 0.0
    cfo_b: float = 0.0
    cfo_strategy: str = "mean"
    cfo_estimator: str = "median"
    mapping_rule: str = "logmax"
    sync_threshold: float = 0.3
    noiseless: bool = False
    lts_outliers: int = 0
    lts_outlier_amplitude: float = 0.0
    allow_cp_violation: bool = False
    genie_sync: bool = False
    include_downlink: bool = True
    jobs: int = 1

    @property
    def payload_bits(self) -> int:
        return 8 * self.payload_bytes


@dataclass(frozen=True)
class TrialRecord:
    scheme: SchemeId
    snr_db: float
    offset: int
    trial: int
    uplink_frame_error: bool
    p2p_frame_errors: tuple[bool, ...]
    xor_bit_errors: int
    total_bits: int
    p2p_bit_errors: int = 0
    p2p_total_bits: int = 0
    sync_failed: bool = False


def draw_taps(rng: np.random.Generator, max_span: int) -> ChannelTaps:
    """Random two-tap channel: dominant first path, echo 0.15-0.6 of its
    amplitude at a random lag within `max_span`, unit total power."""
    if max_span < 1:
        return ChannelTaps.flat()
    lag = int(rng.integers(1, max_span + 1))
    ratio = rng.uniform(0.15, 0.6)
    h0 = np.exp(2j * np.pi * rng.random())
    h1 = ratio * np.exp(2j * np.pi * rng.random())
    gains = np.zeros(lag + 1, dtype=complex)
    gains[0], gains[-1] = h0, h1
    gains /= np.sqrt(np.sum(np.abs(gains) ** 2))
    return ChannelTaps(tuple(gains))


def _trial_taps(
    cfg: SweepConfig, params: OfdmParams, offset: int, rng: np.random.Generator
) -> tuple[ChannelTaps, ChannelTaps]:
    if cfg.channel_mode == "flat":
        return ChannelTaps.flat(), ChannelTaps.flat()
    if cfg.channel_mode == "fixed":
        return ChannelTaps(cfg.taps_a), ChannelTaps(cfg.taps_b)
    if cfg.channel_mode == "two_tap_random":
        span_a = min(cfg.max_tap_span, params.cp_len - 1)
        span_b = min(cfg.max_tap_span, params.cp_len - 1 - offset)
        return draw_taps(rng, span_a), draw_taps(rng, span_b)
    raise ValueError(f"unknown channel mode {cfg.channel_mode!r}")


def _receiver_config(cfg: SweepConfig, params: OfdmParams, offset: int, s2: float) -> ReceiverConfig:
    return ReceiverConfig(
        payload_bits=cfg.payload_bits,
        coded=cfg.coded,
        sync_threshold=cfg.sync_threshold,
        cfo_estimator=cfg.cfo_estimator,
        cfo_strategy=cfg.cfo_strategy,
        mapping_rule=cfg.mapping_rule,
        noise_variance=max(s2, 1e-30),
        genie_sync=ground_truth_sync(offset, params) if cfg.genie_sync else None,
    )


def _p2p_link(
    payload: np.ndarray,
    role: NodeRole,
    taps: ChannelTaps,
    cfo: CfoSpec,
    s2: float,
    params: OfdmParams,
    cfg: SweepConfig,
    rng: np.random.Generator,
):
    frame, _ = build_frame(role, payload, params, coded=cfg.coded)
    y = add_awgn(apply_cfo(apply_channel(frame, taps), cfo), s2, rng)
    rx = replace(
        _receiver_config(cfg, params, 0, s2),
        genie_sync=ground_truth_sync(0, params) if cfg.genie_sync else None,
    )
    return p2p_receive(y, role, params, rx)


def _rng_for(cfg: SweepConfig, scheme: SchemeId, snr_db: float, offset: int, trial: int):
    scheme_code = {SchemeId.FPNC: 1, SchemeId.SNC: 2, SchemeId.TS: 3}[scheme]
    snr_milli = int(round(snr_db * 1000.0))
    return make_rng(cfg.seed, scheme_code, snr_milli, offset, int(cfg.coded), trial)


def run_fpnc_trial(
    cfg: SweepConfig,
    params: OfdmParams,
    snr_db: float,
    offset: int,
    trial: int,
    collect_diagnostics: bool = False,
):
    """One simultaneous-uplink exchange through the relay, optionally with
    the noisy downlink broadcast."""
    rng = _rng_for(cfg, SchemeId.FPNC, snr_db, offset, trial)
    s2 = 0.0 if cfg.noiseless else noise_variance_for_snr_db(snr_db)
    payload_a = rng.integers(0, 2, cfg.payload_bits).astype(np.uint8)
    payload_b = rng.integers(0, 2, cfg.payload_bits).astype(np.uint8)
    taps_a, taps_b = _trial_taps(cfg, params, offset, rng)
    scenario = UplinkScenario(
        taps_a=taps_a,
        taps_b=taps_b,
        offset_b=offset,
        cfo_a=CfoSpec(cfg.cfo_a),
        cfo_b=CfoSpec(cfg.cfo_b),
        noise_variance=s2,
    )
    frame_a, layout = build_frame(NodeRole.A, payload_a, params, coded=cfg.coded)
    frame_b, _ = build_frame(NodeRole.B, payload_b, params, coded=cfg.coded)
    with warnings.catch_warnings():
        if cfg.allow_cp_violation:
            warnings.simplefilter("ignore", CpViolationWarning)
        y = superpose_uplink(frame_a, frame_b, scenario, rng, cp_len=params.cp_len)
    if cfg.lts_outliers > 0:
        # first LTS unit of each node, so every glitch pair lands on the
        # unit-spaced sample products used for CFO estimation
        unit1_a = layout.lts_span_a[0] + params.cp_len
        unit1_b = layout.lts_span_b[0] + params.cp_len + offset
        regions = [(unit1_a, unit1_a + params.n_fft), (unit1_b, unit1_b + params.n_fft)]
        y = inject_outliers(
            y, regions, cfg.lts_outliers, cfg.lts_outlier_amplitude, params.n_fft, rng
        )

    truth = payload_a ^ payload_b
    diag = None
    try:
        xor_frame, diag = relay_receive(y, params, _receiver_config(cfg, params, offset, s2))
        errors = int(np.count_nonzero(xor_frame.xor_source_bits != truth))
        sync_failed = False
    except SyncError:
        xor_frame, errors, sync_failed = None, cfg.payload_bits, True

    p2p_errors: tuple[bool, ...] = ()
    if cfg.include_downlink and xor_frame is not None:
        y_dl = add_awgn(xor_frame.downlink_signal, s2, rng)
        out = p2p_receive(y_dl, NodeRole.RELAY, params, _receiver_config(cfg, params, 0, s2))
        dl_err = (not out.sync_ok) or bool(
            np.any(out.decoded_bits != xor_frame.xor_source_bits)
        )
        p2p_errors = (dl_err,)
    elif cfg.include_downlink:
        p2p_errors = (True,)

    record = TrialRecord(
        scheme=SchemeId.FPNC,
        snr_db=snr_db,
        offset=offset,
        trial=trial,
        uplink_frame_error=errors > 0,
        p2p_frame_errors=p2p_errors,
        xor_bit_errors=errors,
        total_bits=cfg.payload_bits,
        sync_failed=sync_failed,
    )
    return (record, diag) if collect_diagnostics else record


def run_snc_trial(cfg: SweepConfig, params: OfdmParams, snr_db: float, trial: int) -> TrialRecord:
    """Two sequential single-user uplink slots; the relay XORs the two
    decoded frames, and the error is judged on that XOR frame."""
    rng = _rng_for(cfg, SchemeId.SNC, snr_db, 0, trial)
    s2 = 0.0 if cfg.noiseless else noise_variance_for_snr_db(snr_db)
    payload_a = rng.integers(0, 2, cfg.payload_bits).astype(np.uint8)
    payload_b = rng.integers(0, 2, cfg.payload_bits).astype(np.uint8)
    taps_a, _ = _trial_taps(cfg, params, 0, rng)
    taps_b, _ = _trial_taps(cfg, params, 0, rng)
    out_a = _p2p_link(payload_a, NodeRole.A, taps_a, CfoSpec(cfg.cfo_a), s2, params, cfg, rng)
    out_b = _p2p_link(payload_b, NodeRole.B, taps_b, CfoSpec(cfg.cfo_b), s2, params, cfg, rng)

    truth = payload_a ^ payload_b
    slot_err_a = (not out_a.sync_ok) or bool(np.any(out_a.decoded_bits != payload_a))
    slot_err_b = (not out_b.sync_ok) or bool(np.any(out_b.decoded_bits != payload_b))
    if out_a.sync_ok and out_b.sync_ok:
        xor_decoded = out_a.decoded_bits ^ out_b.decoded_bits
        errors = int(np.count_nonzero(xor_decoded != truth))
    else:
        errors = cfg.payload_bits
    return TrialRecord(
        scheme=SchemeId.SNC,
        snr_db=snr_db,
        offset=0,
        trial=trial,
        uplink_frame_error=errors > 0,
        p2p_frame_errors=(slot_err_a, slot_err_b),
        xor_bit_errors=errors,
        total_bits=cfg.payload_bits,
        sync_failed=not (out_a.sync_ok and out_b.sync_ok),
    )


def run_ts_trial(cfg: SweepConfig, params: OfdmParams, snr_db: float, trial: int) -> TrialRecord:
    """Two independent point-to-point uplink frames; their error
    indicators estimate the plain link FER used across all schemes."""
    rng = _rng_for(cfg, SchemeId.TS, snr_db, 0, trial)
    s2 = 0.0 if cfg.noiseless else noise_variance_for_snr_db(snr_db)
    bit_errors = 0
    frame_errors = []
    for role, cfo in ((NodeRole.A, cfg.cfo_a), (NodeRole.B, cfg.cfo_b)):
        payload = rng.integers(0, 2, cfg.payload_bits).astype(np.uint8)
        taps, _ = _trial_taps(cfg, params, 0, rng)
        out = _p2p_link(payload, role, taps, CfoSpec(cfo), s2, params, cfg, rng)
        if out.sync_ok:
            errs = int(np.count_nonzero(out.decoded_bits != payload))
        else:
            errs = cfg.payload_bits
        bit_errors += errs
        frame_errors.append(errs > 0)
    return TrialRecord(
        scheme=SchemeId.TS,
        snr_db=snr_db,
        offset=0,
        trial=trial,
        uplink_frame_error=any(frame_errors),
        p2p_frame_errors=tuple(frame_errors),
        xor_bit_errors=0,
        total_bits=0,
        p2p_bit_errors=bit_errors,
        p2p_total_bits=2 * cfg.payload_bits,
    )


# ---------------------------------------------------------------------------
# aggregation


def wilson_interval(successes: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if n == 0:
        return (0.0, 1.0)
    p = successes / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


def frame_ber_interval(per_frame_ber: np.ndarray, z: float = 1.959963984540054):
    """Mean and normal-theory CI of per-frame bit error rates.

    Frames are the independent sampling unit (channel and noise are drawn
    per frame), so the CI is computed over frame means rather than pooled
    bits, which would understate the variance.
    """
    per_frame_ber = np.asarray(per_frame_ber, dtype=float)
    n = len(per_frame_ber)
    if n == 0:
        return 0.0, 0.0, 1.0
    mean = float(per_frame_ber.mean())
    if n == 1:
        return mean, 0.0, 1.0
    se = float(per_frame_ber.std(ddof=1)) / math.sqrt(n)
    return mean, max(0.0, mean - z * se), min(1.0, mean + z * se)


def throughput(
    scheme: SchemeId, fer_uplink: float | None, fer_p2p: float | None
) -> float | None:
    """Per-direction throughput from slot counting and frame error rates."""
    for v in (fer_uplink, fer_p2p):
        if v is not None and not 0.0 <= v <= 1.0:
            raise ValueError(f"frame error rate {v} outside [0, 1]")
    if fer_p2p is None:
        return None
    if scheme == SchemeId.TS:
        return 0.25 * (1.0 - fer_p2p) ** 2
    if fer_uplink is None:
        return None
    factor = 0.5 if scheme == SchemeId.FPNC else 1.0 / 3.0
    return factor * (1.0 - fer_uplink) * (1.0 - fer_p2p)


@dataclass
class SweepRow:
    scheme: SchemeId
    snr_db: float
    offset: int
    trials: int
    fer: float
    fer_ci: tuple[float, float]
    ber: float
    ber_ci: tuple[float, float]
    throughput: float | None

    def csv_values(self) -> list[str]:
        def fmt(x):
            return "" if x is None else f"{x:.6g}"

        return [
            self.scheme.value,
            fmt(self.snr_db),
            str(self.offset),
            str(self.trials),
            fmt(self.fer),
            fmt(self.fer_ci[0]),
            fmt(self.fer_ci[1]),
            fmt(self.ber),
            fmt(self.ber_ci[0]),
            fmt(self.ber_ci[1]),
            fmt(self.throughput),
        ]


CSV_COLUMNS = (
    "scheme,snr_db,offset,trials,fer,fer_ci_low,fer_ci_high,"
    "ber,ber_ci_low,ber_ci_high,throughput"
)


def _cell_records(args) -> list[TrialRecord]:
    cfg, params, scheme, snr_db, offset = args
    records = []
    for t in range(cfg.trials):
        if scheme == SchemeId.FPNC:
            records.append(run_fpnc_trial(cfg, params, snr_db, offset, t))
        elif scheme == SchemeId.SNC:
            records.append(run_snc_trial(cfg, params, snr_db, t))
        else:
            records.append(run_ts_trial(cfg, params, snr_db, t))
    return records


def sweep_cells(cfg: SweepConfig) -> list[tuple[SchemeId, float, int]]:
    """(scheme, snr, offset) grid; arrival offsets only apply to the
    simultaneous-uplink scheme."""
    cells = []
    for scheme in cfg.schemes:
        for snr in cfg.snr_db:
            if scheme == SchemeId.FPNC:
                cells.extend((scheme, snr, off) for off in cfg.offsets)
            else:
                cells.append((scheme, snr, 0))
    return cells


def run_sweep(cfg: SweepConfig, params: OfdmParams | None = None) -> list[SweepRow]:
    """Run all cells and aggregate. Output is a deterministic function of
    the config: trials are seeded individually and rows are emitted in
    grid order regardless of worker count."""
    params = params or OfdmParams()
    cells = sweep_cells(cfg)
    args = [(cfg, params, *cell) for cell in cells]
    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            all_records = list(pool.map(_cell_records, args))
    else:
        all_records = [_cell_records(a) for a in args]

    fer_p2p_by_snr: dict[float, float] = {}
    for cell, records in zip(cells, all_records):
        scheme, snr, _ = cell
        if scheme == SchemeId.TS:
            errs = [e for r in records for e in r.p2p_frame_errors]
            fer_p2p_by_snr[snr] = float(np.mean(errs)) if errs else 0.0

    rows = []
    for cell, records in zip(cells, all_records):
        scheme, snr, offset = cell
        n = len(records)
        if scheme == SchemeId.TS:
            errs = [e for r in records for e in r.p2p_frame_errors]
            fer = float(np.mean(errs))
            fer_ci = wilson_interval(sum(errs), len(errs))
            per_frame = [
                r.p2p_bit_errors / r.p2p_total_bits for r in records if r.p2p_total_bits
            ]
            ber, lo, hi = frame_ber_interval(per_frame)
            th = throughput(scheme, None, fer)
        else:
            n_err = sum(r.uplink_frame_error for r in records)
            fer = n_err / n
            fer_ci = wilson_interval(n_err, n)
            per_frame = [r.xor_bit_errors / r.total_bits for r in records if r.total_bits]
            ber, lo, hi = frame_ber_interval(per_frame)
            th = throughput(scheme, fer, fer_p2p_by_snr.get(snr))
        rows.append(
            SweepRow(
                scheme=scheme,
                snr_db=snr,
                offset=offset,
                trials=n,
                fer=fer,
                fer_ci=fer_ci,
                ber=ber,
                ber_ci=(lo, hi),
                throughput=th,
            )
        )
    return rows

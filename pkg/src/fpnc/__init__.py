"""Link-level simulator for frequency-domain physical-layer network coding
over a two-way relay channel: OFDM transmitters, an impairment channel,
the full relay receive-and-forward chain, and a Monte Carlo harness
comparing FPNC against time-scheduled relaying baselines."""

from .channel import CfoSpec, ChannelTaps, UplinkScenario, delay_spread, superpose_uplink
from .coding import bpsk_demap, bpsk_map, conv_encode, viterbi_decode
from .endnode import P2pReceiverOutput, extract_partner, p2p_receive
from .experiments import SchemeId, SweepConfig, TrialRecord, run_sweep, throughput
from .frame import FrameLayout, build_frame, gen_lts, gen_pilots, gen_sts
from .params import NodeRole, OfdmParams
from .relay import (
    CfoEstimate,
    ChannelEstimate,
    ReceiverConfig,
    SyncError,
    SyncResult,
    XorFrame,
    relay_receive,
    sts_sync,
)
from .sigproc import add_awgn, circular_convolve, dft, idft, linear_convolve, make_rng

__version__ = "0.1.0"

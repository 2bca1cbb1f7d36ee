"""Sweep outputs: delimited results plus rendered comparison figures.

The CSV is the primary artifact (one row per scheme/SNR/offset cell);
figures are optional companions written next to it.
"""
from __future__ import annotations

import os
import tempfile
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .experiments import CSV_COLUMNS, SchemeId, SweepRow

_STYLE = {
    SchemeId.FPNC: dict(color="tab:blue", marker="o"),
    SchemeId.SNC: dict(color="tab:orange", marker="s"),
    SchemeId.TS: dict(color="tab:green", marker="^"),
}


def write_csv(rows: list[SweepRow], path: str | Path) -> None:
    """Atomic CSV write: temp file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".csv.partial")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(CSV_COLUMNS + "\n")
            for row in rows:
                fh.write(",".join(row.csv_values()) + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _series(rows: list[SweepRow]) -> dict[tuple[SchemeId, int], list[SweepRow]]:
    series: dict[tuple[SchemeId, int], list[SweepRow]] = {}
    for row in rows:
        series.setdefault((row.scheme, row.offset), []).append(row)
    for group in series.values():
        group.sort(key=lambda r: r.snr_db)
    return series


def _label(scheme: SchemeId, offset: int, multi_offset: bool) -> str:
    name = scheme.value.upper()
    if scheme == SchemeId.FPNC and multi_offset:
        return f"{name} (offset {offset})"
    return name


def render_figures(rows: list[SweepRow], out_dir: str | Path, stem: str = "sweep") -> list[Path]:
    """Render BER, FER, and throughput versus SNR to PNG files.

    Returns the written paths. Error bars show the stored 95% intervals.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    series = _series(rows)
    multi_offset = len({off for (s, off) in series if s == SchemeId.FPNC}) > 1
    written = []

    specs = [
        ("ber", "XOR bit error rate", lambda r: (r.ber, r.ber_ci)),
        ("fer", "Frame error rate", lambda r: (r.fer, r.fer_ci)),
    ]
    floor = 1e-7
    for kind, ylabel, pick in specs:
        fig, ax = plt.subplots(figsize=(6.0, 4.2))
        for (scheme, offset), group in sorted(series.items(), key=lambda kv: (kv[0][0].value, kv[0][1])):
            snr = [r.snr_db for r in group]
            vals, lo, hi = [], [], []
            for r in group:
                v, (ci_lo, ci_hi) = pick(r)
                vals.append(max(v, floor))
                lo.append(max(v - ci_lo, 0.0))
                hi.append(max(ci_hi - v, 0.0))
            style = dict(_STYLE[scheme])
            if scheme == SchemeId.FPNC and offset > 0:
                style["linestyle"] = "--"
            ax.errorbar(
                snr, vals, yerr=[lo, hi], capsize=3,
                label=_label(scheme, offset, multi_offset), **style,
            )
        ax.set_yscale("log")
        ax.set_xlabel("SNR (dB)")
        ax.set_ylabel(ylabel)
        ax.grid(True, which="both", alpha=0.4)
        ax.legend()
        fig.tight_layout()
        path = out_dir / f"{stem}_{kind}.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)

    if any(r.throughput is not None for r in rows):
        fig, ax = plt.subplots(figsize=(6.0, 4.2))
        for (scheme, offset), group in sorted(series.items(), key=lambda kv: (kv[0][0].value, kv[0][1])):
            pts = [(r.snr_db, r.throughput) for r in group if r.throughput is not None]
            if not pts:
                continue
            style = dict(_STYLE[scheme])
            if scheme == SchemeId.FPNC and offset > 0:
                style["linestyle"] = "--"
            ax.plot(*zip(*pts), label=_label(scheme, offset, multi_offset), **style)
        ax.set_xlabel("SNR (dB)")
        ax.set_ylabel("Throughput per direction (frames/slot)")
        ax.set_ylim(bottom=0.0)
        ax.grid(True, alpha=0.4)
        ax.legend()
        fig.tight_layout()
        path = out_dir / f"{stem}_throughput.png"
        fig.savefig(path, dpi=150)
        plt.close(fig)
        written.append(path)
    return written

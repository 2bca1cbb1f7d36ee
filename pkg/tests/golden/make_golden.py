"""Regenerate the frozen reference vectors (run from the repo root).

The STS/LTS units are structural invariants of the frame format (checked
against periodicity, power, and autocorrelation properties before
freezing); the codec impulse response pins the generator polynomials.
"""
from pathlib import Path

import numpy as np

from fpnc.coding import conv_encode
from fpnc.frame import lts_unit, save_complex_vector, sts_unit
from fpnc.params import OfdmParams

HERE = Path(__file__).parent


def main():
    params = OfdmParams()
    unit = sts_unit(params)
    assert len(unit) == 16
    assert abs(np.mean(np.abs(unit) ** 2) - 1.0) < 1e-12
    save_complex_vector(
        HERE / "sts_unit.txt", unit,
        "one short-training unit (16 samples, unit average power)\nformat: re im",
    )

    lts = lts_unit(params)
    assert len(lts) == 64
    assert abs(np.mean(np.abs(lts) ** 2) - 1.0) < 1e-12
    save_complex_vector(
        HERE / "lts_unit.txt", lts,
        "one long-training unit (64 samples, unit average power)\nformat: re im",
    )

    impulse = np.zeros(16, dtype=np.uint8)
    impulse[0] = 1
    coded = conv_encode(impulse)
    save_complex_vector(
        HERE / "codec_impulse.txt", coded.astype(float),
        "rate-1/2 codec output for a unit impulse message of 16 bits\n"
        "(interleaved generator outputs, zero-tail terminated)\nformat: re im",
    )
    print("wrote", HERE / "sts_unit.txt", HERE / "lts_unit.txt", HERE / "codec_impulse.txt")


if __name__ == "__main__":
    main()

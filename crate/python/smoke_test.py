#!/usr/bin/env python3
"""Builds the cqabd_py extension, imports it, and exercises the main
surface end to end: quantizer closed forms against the Monte Carlo gain,
water filling, converter power arithmetic, and a small deterministic sweep.
"""

import math
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]


def build_and_import():
    subprocess.run(
        ["cargo", "build", "--release", "-p", "cqabd-py"], cwd=ROOT, check=True
    )
    so = ROOT / "target" / "release" / "libcqabd_py.so"
    stage = Path(tempfile.mkdtemp(prefix="cqabd_py_"))
    shutil.copy2(so, stage / "cqabd_py.so")
    sys.path.insert(0, str(stage))
    import cqabd_py

    return cqabd_py


def main():
    m = build_and_import()

    # Per-bit default steps are the distortion-minimizing uniform grids.
    for bits, want in [(1, 1.596), (2, 0.996), (3, 0.586), (4, 0.335)]:
        got = m.default_step(bits)
        assert abs(got - want) < 2e-3, (bits, got)

    # One-bit gain is sqrt(2/pi) for any step.
    _, delta1 = m.bussgang_factors(1)
    assert abs(delta1 - math.sqrt(2.0 / math.pi)) < 1e-9

    # Analytic two-bit gain tracks the Monte Carlo estimate.
    alpha2, delta2 = m.bussgang_factors(2)
    gain, se = m.empirical_gain(2, samples=200_000, seed=7)
    assert abs(gain - delta2) <= 4.0 * se, (gain, delta2, se)
    assert 0.0 < delta2 <= 1.0 and alpha2 > 0.0

    # Midrise grid: levels at +-step/2 for one bit; clipping at two bits.
    assert m.quantize([0.3 - 0.2j], 1, 1.0)[0] == 0.5 - 0.5j
    assert m.quantize([10.0 + 10.0j], 2, 1.0)[0] == 1.5 + 1.5j

    # Water filling, two-mode closed form.
    p = m.water_filling([2.0, 1.0], 3.0, 1.0)
    assert abs(p[0] - 1.75) < 1e-9 and abs(p[1] - 1.25) < 1e-9

    # Converter power arithmetic.
    assert m.calibrated_c_tau() == 8.75
    assert m.adc_power_mw(8.75, 1.0, 4) == 140.0
    assert m.adc_power_mw(8.75, 1.0, 5) == 280.0
    assert abs(m.dac_to_adc_ratio(85.0, 280.0) - 85.0 / 280.0) < 1e-12
    assert m.bit_reduction_saving(4, 2) == 0.75

    # Small sweep: reproducible, positive, ordered in bit depth.
    kwargs = dict(
        nb=8, users=2, antennas_each=2, precoder="rbd",
        snr_db=[5.0, 10.0], trials=3, seed=11,
    )
    rows_a = m.sweep(mode="cqa", bits=2, **kwargs)
    rows_b = m.sweep(mode="cqa", bits=2, **kwargs)
    assert rows_a == rows_b
    rows_b3 = m.sweep(mode="cqa", bits=3, **kwargs)
    rows_fr = m.sweep(mode="fr", bits=0, **kwargs)
    for r2, r3, rf in zip(rows_a, rows_b3, rows_fr):
        assert 0.0 < r2[4] < r3[4] < rf[4], (r2, r3, rf)

    # Bad input surfaces as ValueError, not a crash.
    try:
        m.sweep(mode="cqa", bits=2, nb=2, users=2, antennas_each=2,
                precoder="rbd", snr_db=[5.0], trials=1, seed=1)
    except ValueError:
        pass
    else:
        raise AssertionError("expected ValueError for nu > nb")

    print(f"smoke test passed: delta(b=2) = {delta2:.4f}, "
          f"monte carlo gain = {gain:.4f} +- {se:.1e}, "
          f"{len(rows_a)} sweep rows per configuration")


if __name__ == "__main__":
    main()

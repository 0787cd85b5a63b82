"""Throughput comparison of the compiled and pure-Python branch kernels.

Both kernels implement decode_unit with identical semantics (the test suite
checks bit-for-bit parity); this script measures what the compiled extension
buys on a realistic joint decode.  Run from the repository root:

    python3 benchmarks/bench_kernel.py [--units 120] [--ebn0 10] [--repeats 5]
"""

import argparse
import time

import numpy as np

from tcmnoma import _kernel_py, decoder
from tcmnoma.channel import apply_channel, awgn_realization, calibrate_noise
from tcmnoma.decoder import decode_two_layer
from tcmnoma.design import build_design
from tcmnoma.encoder import random_frame, transmit_frame

try:
    from tcmnoma import _speedups
except ImportError:
    _speedups = None


def _noisy_frame(design, units, ebn0_db, seed):
    rng = np.random.default_rng(seed)
    frame = random_frame(design.mapping.J, units, design.q, rng)
    tx = transmit_frame(frame, design.mapping, design.diagram, design.labeling)
    sigma2 = calibrate_noise(ebn0_db, 3.0, design.mean_energy)
    real = awgn_realization(tx.positions.shape[0], design.mapping.K, sigma2)
    y = apply_channel(tx.positions, real, rng)
    return frame, y, real


def _time_decode(kernel, design, frame, y, real, repeats):
    decoder.decode_unit = kernel
    words = None
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        res = decode_two_layer(
            y, design.mapping, design.diagram, design.labeling, real, collect_stats=False
        )
        best = min(best, time.perf_counter() - t0)
        words = res.words
    return best, words


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--units", type=int, default=120)
    ap.add_argument("--ebn0", type=float, default=10.0)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args(argv)

    print("building design bundle ...")
    design = build_design()
    frame, y, real = _noisy_frame(design, args.units, args.ebn0, args.seed)
    original = decoder.decode_unit

    try:
        t_py, words_py = _time_decode(_kernel_py.decode_unit, design, frame, y, real, 1)
        print(f"python   kernel: {t_py:8.3f} s  ({t_py / args.units * 1e3:7.2f} ms/unit)")
        if _speedups is None:
            print("compiled kernel: not built")
            return
        t_c, words_c = _time_decode(
            _speedups.decode_unit, design, frame, y, real, args.repeats
        )
        print(f"compiled kernel: {t_c:8.3f} s  ({t_c / args.units * 1e3:7.2f} ms/unit)")
        print(f"speedup: {t_py / t_c:.1f}x")
        if not np.array_equal(words_py, words_c):
            raise SystemExit("kernels disagreed on the decoded payload")
        print(f"decoded payloads identical; frame errors vs sent: "
              f"{int(np.count_nonzero(words_c != frame.words))}")
    finally:
        decoder.decode_unit = original


if __name__ == "__main__":
    main()

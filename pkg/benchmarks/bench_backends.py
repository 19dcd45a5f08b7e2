"""Compare the numba kernel against the pure-numpy fallback on the
conditional-grid workload that dominates pipeline runtime.

Run as:  python benchmarks/bench_backends.py [--repeats 3]
"""

import argparse
import time

import numpy as np

from mdfilter import (DetectionOutcome, TapSpec, macro_qubit,
                      transmitted_joint, uniform_diff_state)
from mdfilter import _accel


def time_case(label, obj, tap, out, repeats):
    rows = {}
    for backend in ("numba", "numpy"):
        if backend == "numba" and _accel.numba is None:
            continue
        _accel.set_backend(backend)
        transmitted_joint(obj, tap, out)          # warm-up / JIT
        best = float("inf")
        for _ in range(repeats):
            t0 = time.perf_counter()
            joint = transmitted_joint(obj, tap, out)
            best = min(best, time.perf_counter() - t0)
        rows[backend] = (best, joint.detection_prob)
    ref = None
    for backend, (dt, z) in rows.items():
        if ref is None:
            ref = z
        assert abs(z - ref) <= 1e-9 * max(abs(ref), 1e-300), "backends disagree"
        print(f"  {label:38s} {backend:6s} {dt * 1e3:9.1f} ms")
    if len(rows) == 2:
        print(f"  {label:38s} speedup {rows['numpy'][0] / rows['numba'][0]:6.1f}x")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    print(f"default backend: {_accel.active_backend()}")
    uniform = uniform_diff_state(200)
    macro = macro_qubit(1.87, "phi", 1e-9)
    cases = [
        ("uniform S0=200, S=20, Delta=0", uniform, TapSpec(0.1),
         DetectionOutcome(20, 0)),
        ("macro g=1.87, S=20, Delta=0", macro, TapSpec(0.24),
         DetectionOutcome(20, 0)),
        ("macro g=1.87, S=40, Delta=0", macro, TapSpec(0.24),
         DetectionOutcome(40, 0)),
    ]
    for label, obj, tap, out in cases:
        time_case(label, obj, tap, out, args.repeats)
    _accel.set_backend("numba" if _accel.numba is not None else "numpy")


if __name__ == "__main__":
    main()

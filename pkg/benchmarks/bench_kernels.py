"""Benchmark the pure-Python relation kernel against the compiled one."""

import argparse
import time

from summachine.generator import generate_system, relay_family
from summachine.kernels import build_kernel
from summachine.unfolding import unfold


def _best_of(runs: int, fn) -> float:
    best = float("inf")
    for _ in range(runs):
        started = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - started)
    return best


def _workloads(heavy: bool):
    yield "relay n=6", relay_family(6)
    yield "relay n=8", relay_family(8)
    for seed, n, states, coupling in ((7, 3, 4, 2), (11, 4, 4, 3)):
        name = f"random seed={seed} n={n}"
        yield name, generate_system(seed, n, states, coupling)
    if heavy:
        yield "random seed=3 n=3 wide", generate_system(3, 3, 5, 3)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--runs", type=int, default=3, help="repeats per measurement (best kept)")
    ap.add_argument("--heavy", action="store_true", help="include a larger workload")
    args = ap.parse_args()

    try:
        build_kernel(unfold(relay_family(2)), backend="speed")
        backends = ("pure", "speed")
    except (ImportError, ValueError):
        print("compiled kernel unavailable; timing the pure backend only")
        backends = ("pure",)

    header = f"{'workload':28} {'nodes':>6} " + " ".join(f"{b:>10}" for b in backends)
    if len(backends) == 2:
        header += f" {'speedup':>8}"
    print(header)
    for name, spec in _workloads(args.heavy):
        sm = unfold(spec)
        kernels = {b: build_kernel(sm, backend=b) for b in backends}
        times = {
            b: _best_of(args.runs, lambda k=kernels[b]: (k.sweep_totality(), k.sweep_property1()))
            for b in backends
        }
        row = f"{name:28} {sm.stats['nodes']:>6} " + " ".join(f"{times[b]:>9.4f}s" for b in backends)
        if len(backends) == 2:
            row += f" {times['pure'] / times['speed']:>7.1f}x"
        print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

"""Compiled vs pure-Python kernel timings on the same synthetic streams.

    python benchmarks/bench_backends.py [--sizes 200,4761] [--repeats 3]
"""

import argparse
import statistics
import time

import numpy as np

from v2icpd.detectors import _pykernels, default_params
from v2icpd.detectors.mixture import seed_window
from v2icpd.detectors.params import em_floors
from v2icpd.harness import synth_stream

try:
    from v2icpd.detectors import _ckernels
except ImportError:
    _ckernels = None


def _em(k, cfg, x):
    scores = np.empty(x.size)
    k.em_run(x, seed_window(cfg), 0, cfg.theta1.mu, cfg.theta1.sigma, cfg.theta2.mu, cfg.theta2.sigma,
             cfg.pi, cfg.iterations, *em_floors(cfg), cfg.pi_floor, scores)
    return scores


def _cusum(k, cfg, x):
    n = x.size
    cp, cm = np.empty(n), np.empty(n)
    al, sd = np.empty(n, dtype=np.int8), np.empty(n, dtype=np.int8)
    k.cusum_run(x, cfg.mu1, cfg.K, cfg.H, 0.0, 0.0, 0, 0, 0.0, cp, cm, al, sd)
    return cp


def _acusum(k, cfg, x):
    n = x.size
    cp, cm = np.empty(n), np.empty(n)
    al, sd = np.empty(n, dtype=np.int8), np.empty(n, dtype=np.int8)
    k.acusum_run(x, cfg.mu1, cfg.sigma, cfg.alpha, cfg.H, 0.0, 0.0, cfg.mu1, cp, cm, al, sd)
    return cp


RUNNERS = {"EM": _em, "CUSUM": _cusum, "ACUSUM": _acusum}


def timed(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="200,4761")
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--attack", default="DOS")
    args = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled extension not built; nothing to compare")
        return 1
    print(f"{'detector':8s} {'n':>6s} {'python s':>10s} {'cython s':>10s} {'speedup':>8s} identical")
    for name, run in RUNNERS.items():
        cfg = default_params(args.attack, name)
        for n in (int(s) for s in args.sizes.split(",")):
            x = synth_stream(cfg, n)
            tp, a = timed(lambda: run(_pykernels, cfg, x), args.repeats)
            tc, b = timed(lambda: run(_ckernels, cfg, x), args.repeats)
            same = np.array_equal(a, b)
            print(f"{name:8s} {n:6d} {tp:10.5f} {tc:10.5f} {tp / max(tc, 1e-12):8.1f} {same}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())

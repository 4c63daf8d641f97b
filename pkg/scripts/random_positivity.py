"""Randomized nonnegativity and barrier experiment.

Draws random positive parameters and bump initial data, alternating 1D
(N = 128) and 2D (64 x 64) runs to t = 1, and reports per run the step
count, the smallest value reached and the closest approach to the
L-infinity barriers for h and tau.
"""

import argparse
import time

import numpy as np

from haptofv.analysis import random_problem
from haptofv.monitors import MonitorConfig
from haptofv.stepper import StepControl, run


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--runs", type=int, default=50)
    ap.add_argument("--seed", type=int, default=2024)
    ap.add_argument("--t-end", type=float, default=1.0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    t_all = time.perf_counter()
    print(f"{'run':>3} {'dim':>3} {'steps':>6} {'min value':>10} {'h/M_h':>7} {'tau/M_tau':>9} {'secs':>5}  failed")
    for i in range(args.runs):
        dim, n = (1, 128) if i % 2 == 0 else (2, 64)
        p, reg, s0 = random_problem(rng, dim, n)
        t0 = time.perf_counter()
        res = run(p, reg, s0, StepControl(t_end=args.t_end), MonitorConfig())
        bad = sorted({k for r in res.reports for k, ok in r.flags.items() if not ok})
        h_ratio = max(r.max_h / r.M_h for r in res.reports)
        t_ratio = max(r.max_tau / r.M_tau for r in res.reports)
        print(f"{i:3d} {dim:3d} {res.steps:6d} {res.state.min():10.3e} {h_ratio:7.4f} {t_ratio:9.4f} "
              f"{time.perf_counter() - t0:5.1f}  {','.join(bad) or '-'}")
    print(f"total {time.perf_counter() - t_all:.1f} s")


if __name__ == "__main__":
    main()

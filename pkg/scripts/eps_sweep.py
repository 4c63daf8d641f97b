"""Vanishing-regularization sweep on the demo problem.

Prints the space-time L2 distance between neighbouring members for every
species and the weak residuals of each member.
"""

import argparse

from haptofv.analysis import epsilon_sweep
from haptofv.io import build_initial_state, load_config, parse_config


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("config", nargs="?")
    ap.add_argument("--eps", type=float, nargs="+", default=[0.1, 0.05, 0.025, 0.0125])
    args = ap.parse_args()

    cfg = load_config(args.config) if args.config else parse_config("")
    res = epsilon_sweep(cfg.params, build_initial_state(cfg), cfg.step, args.eps, cfg.reg.theta)
    pairs = [f"{a:g}/{b:g}" for a, b in zip(res.eps_list, res.eps_list[1:])]
    print("pair        " + "  ".join(f"{sp:>10}" for sp in res.pairwise_l2))
    for i, label in enumerate(pairs):
        print(f"{label:<11} " + "  ".join(f"{res.pairwise_l2[sp][i]:10.4e}" for sp in res.pairwise_l2))
    print(f"c1 final/first ratio: {res.ratio():.4f}")
    print("weak residuals (test functions in rows of three)")
    for eps, table in res.weak_residuals.items():
        for eq, vals in table.items():
            print(f"  eps={eps:<7g} {eq:<4} " + " ".join(f"{v: .3e}" for v in vals))


if __name__ == "__main__":
    main()

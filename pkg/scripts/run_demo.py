"""Run the demo configuration and print a short monitor summary."""

import argparse

from haptofv.io import build_initial_state, load_config, parse_config, write_series
from haptofv.stepper import run


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("config", nargs="?", help="config file (default: built-in demo)")
    ap.add_argument("--t-end", type=float)
    ap.add_argument("--series", help="write the monitor series CSV here")
    args = ap.parse_args()

    cfg = load_config(args.config) if args.config else parse_config("")
    if args.t_end is not None:
        cfg = cfg.replace_values(step__t_end=args.t_end)
    s0 = build_initial_state(cfg)
    res = run(cfg.params, cfg.reg, s0, cfg.step, cfg.monitor)
    if args.series:
        write_series(res.reports, args.series)

    first, last = res.reports[0], res.reports[-1]
    print(f"steps: {res.steps}  reports: {len(res.reports)}")
    print(f"cell mass   {first.mass_c1 + first.mass_c2:.6f} -> {last.mass_c1 + last.mass_c2:.6f}")
    print(f"max h       {last.max_h:.6f}  (barrier {last.M_h:.6f})")
    print(f"max tau     {last.max_tau:.6f}  (barrier {last.M_tau:.6f})")
    print(f"entropy F   {first.entropy_F:.6f} -> {last.entropy_F:.6f}")
    print(f"int D       {last.dissipation_integral:.6f}")
    failures = res.hard_failures(cfg.monitor.hard_checks)
    print(f"hard monitor failures: {len(failures)}")


if __name__ == "__main__":
    main()

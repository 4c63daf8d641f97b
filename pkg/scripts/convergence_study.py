"""Convergence studies: decoupled heat and decay problems, the
uniform-state comparison against the reaction ODE, and weak residuals
under simultaneous grid and step refinement."""

import argparse

import numpy as np

from haptofv.analysis import (
    all_residuals,
    default_test_functions,
    fixed_step_run,
    manufactured_convergence,
    observed_orders,
    ode_oracle,
    uniform_state,
)
from haptofv.grid import Grid
from haptofv.io import build_initial_state, parse_config
from haptofv.model import ModelParams, Regularization
from haptofv.stepper import SPECIES, run


def uniform_study(dts):
    p, reg = ModelParams(), Regularization()
    y0 = (0.3, 0.1, 0.5, 0.3)
    s0 = uniform_state(Grid.uniform(8), y0)
    errs = []
    for dt in dts:
        tr = fixed_step_run(p, reg, s0, dt, 1.0)
        exact = ode_oracle(p, reg, y0, tr.times)
        errs.append(max(float(np.max(np.abs(getattr(tr, sp) - exact[:, i][:, None])))
                        for i, sp in enumerate(SPECIES)))
    return errs, observed_orders(errs)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--skip-weak", action="store_true", help="skip the (N, dt) refinement of weak residuals")
    args = ap.parse_args()

    heat = manufactured_convergence("heat", (16, 32, 64, 128, 256))
    print("heat:  N", heat.n_list, "errors", [f"{e:.3e}" for e in heat.errors],
          "orders", [f"{o:.3f}" for o in heat.orders])
    for kind in ("h", "tau"):
        r = manufactured_convergence(kind, dt_list=(4e-3, 2e-3, 1e-3, 5e-4))
        print(f"decay {kind}: dt", r.dts, "errors", [f"{e:.3e}" for e in r.errors],
              "orders", [f"{o:.3f}" for o in r.orders])
    dts = (2e-2, 1e-2, 5e-3, 2.5e-3, 1.25e-3)
    errs, orders = uniform_study(dts)
    print("uniform vs ODE: dt", dts, "errors", [f"{e:.3e}" for e in errs], "orders", [f"{o:.3f}" for o in orders])

    if args.skip_weak:
        return
    tests = default_test_functions(1.0)
    prev = None
    for n, dt in ((128, 2e-3), (256, 1e-3), (512, 5e-4)):
        cfg = parse_config(f"grid.n = {n}\nstep.dt_max = {dt}")
        res = run(cfg.params, cfg.reg, build_initial_state(cfg), cfg.step, cfg.monitor, save_cadence=dt)
        cur = all_residuals(res.trajectory, cfg.params, tests, cfg.reg)
        print(f"weak residuals N={n} dt={dt:g}")
        for eq, vals in cur.items():
            extra = ""
            if prev is not None:
                extra = "  ratios " + " ".join(f"{abs(a / b):.2f}" for a, b in zip(prev[eq], vals))
            print(f"  {eq:<4} " + " ".join(f"{v: .3e}" for v in vals) + extra)
        prev = cur


if __name__ == "__main__":
    main()

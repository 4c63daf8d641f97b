"""Command-line entry point.

Exit codes: 0 success with all hard monitor checks passing, 1 usage or
configuration error, 2 hard monitor failure.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import analysis
from .io import (
    ConfigError,
    SnapshotError,
    build_initial_state,
    load_checkpoint,
    parse_config,
    save_checkpoint,
    write_series,
    write_snapshot,
    write_sweep,
    write_table,
)
from .model import ValidationError
from .monitors import MonitorFailure
from .stepper import NegativityError, run

EXIT_OK, EXIT_USAGE, EXIT_MONITOR = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="haptofv", description="Finite-volume solver for the regularized double-haptotaxis model.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("config", nargs="?", help="key=value configuration file (defaults if omitted)")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override one configuration key (repeatable)")
        p.add_argument("--out", help="output directory (overrides output.dir)")
        return p

    sim = common(sub.add_parser("simulate", help="run one simulation and write the monitor series"))
    sim.add_argument("--stop-at", type=float, help="halt at this time and write a checkpoint")
    sim.add_argument("--checkpoint", help="checkpoint path for --stop-at (default output.checkpoint)")
    sim.add_argument("--resume", help="continue from a checkpoint written for the same configuration")
    common(sub.add_parser("sweep", help="epsilon sweep with pairwise differences and weak residuals"))
    common(sub.add_parser("convergence", help="manufactured-solution convergence study"))
    wk = common(sub.add_parser("weakcheck", help="weak-form residuals of one run"))
    wk.add_argument("--strict-defeq4", action="store_true",
                    help="use the minus sign on the tau production term in the tau identity")
    vc = sub.add_parser("validate-config", help="parse and validate a configuration file")
    vc.add_argument("config")
    vc.add_argument("--print", action="store_true", help="print the fully resolved configuration")
    return ap


def _load(args):
    text = ""
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read {args.config}: {exc.strerror}") from exc
    extra = list(getattr(args, "set", []) or [])
    if getattr(args, "out", None):
        extra.append(f"output.dir = {args.out}")
    if extra:
        text = _merge(text, extra)
    return parse_config(text)


def _merge(text: str, overrides) -> str:
    keys = {o.split("=", 1)[0].strip() for o in overrides}
    kept = [ln for ln in text.splitlines() if ln.split("#", 1)[0].split("=", 1)[0].strip() not in keys]
    return "\n".join(kept + list(overrides)) + "\n"


def _hard_failed(reports, hard) -> list:
    return [(r.t, k) for r in reports for k in r.hard_failures(hard)]


def _simulate(cfg, args) -> int:
    os.makedirs(cfg.output.dir, exist_ok=True)
    diag = cfg.output.path("diagnostic.bin")
    if args.resume:
        ck = load_checkpoint(args.resume, cfg)
        res = run(cfg.params, cfg.reg, ck.state, cfg.step, cfg.monitor, resume=ck.carry, diagnostic_path=diag)
    else:
        res = run(cfg.params, cfg.reg, build_initial_state(cfg), cfg.step, cfg.monitor,
                  stop_at=args.stop_at, diagnostic_path=diag)
    if args.stop_at is not None:
        path = args.checkpoint or cfg.output.checkpoint or cfg.output.path("checkpoint.npz")
        save_checkpoint(path, cfg, res.state, res.carry)
        print(f"checkpoint at t={res.state.t:.6g} -> {path}")
    elif cfg.output.checkpoint:
        save_checkpoint(cfg.output.path(cfg.output.checkpoint), cfg, res.state, res.carry)
    series = cfg.output.path(cfg.output.series)
    if res.reports:
        write_series(res.reports, series)
    write_snapshot(res.state, cfg.output.path(cfg.output.snapshot))
    print(f"{res.steps} steps, t={res.state.t:.6g}, {len(res.reports)} reports -> {series}")
    failed = _hard_failed(res.reports, cfg.monitor.hard_checks)
    if failed:
        print(f"hard monitor failures: {failed[:5]}", file=sys.stderr)
        return EXIT_MONITOR
    return EXIT_OK


def _sweep(cfg) -> int:
    s0 = build_initial_state(cfg)
    tests = analysis.default_test_functions(cfg.step.t_end, cfg.weak_modes, cfg.weak_q)
    res = analysis.epsilon_sweep(cfg.params, s0, cfg.step, cfg.eps_list, cfg.reg.theta,
                                 cfg.monitor, cfg.effective_save_cadence, tests)
    pair, resid = write_sweep(res, cfg.output.dir)
    for j, d in enumerate(res.pairwise_l2["c1"]):
        print(f"eps {res.eps_list[j]:g} vs {res.eps_list[j + 1]:g}: ||dc1|| = {d:.6e}")
    print(f"wrote {pair} and {resid}")
    return EXIT_OK


def _convergence(cfg) -> int:
    os.makedirs(cfg.output.dir, exist_ok=True)
    rows = []
    heat = analysis.manufactured_convergence("heat", cfg.n_list, a2=cfg.params.a2)
    for n, dt, e in zip(heat.n_list, heat.dts, heat.errors):
        rows.append(("heat", n, dt, e))
    print("heat  errors:", " ".join(f"{e:.3e}" for e in heat.errors),
          "orders:", " ".join(f"{o:.3f}" for o in heat.orders))
    for kind, rate in (("h", cfg.params.mu), ("tau", cfg.params.sigma)):
        r = analysis.manufactured_convergence(kind, rate=rate)
        rows += [(kind, "", dt, e) for dt, e in zip(r.dts, r.errors)]
        print(f"{kind:5s} errors:", " ".join(f"{e:.3e}" for e in r.errors),
              "orders:", " ".join(f"{o:.3f}" for o in r.orders))
    path = os.path.join(cfg.output.dir, "convergence.csv")
    write_table(path, ("test", "n", "dt", "error"), rows)
    print(f"wrote {path}")
    return EXIT_OK


def _weakcheck(cfg, strict: bool) -> int:
    os.makedirs(cfg.output.dir, exist_ok=True)
    res = run(cfg.params, cfg.reg, build_initial_state(cfg), cfg.step, cfg.monitor,
              save_cadence=cfg.effective_save_cadence)
    tests = analysis.default_test_functions(cfg.step.t_end, cfg.weak_modes, cfg.weak_q)
    resid = analysis.all_residuals(res.trajectory, cfg.params, tests, cfg.reg, strict)
    rows = []
    for eq, vals in resid.items():
        print(f"{eq:4s} " + " ".join(f"{v:+.3e}" for v in vals))
        rows += [(eq, k, v) for k, v in zip(cfg.weak_modes, vals)]
    path = os.path.join(cfg.output.dir, "weak_residuals.csv")
    write_table(path, ("equation", "mode", "residual"), rows)
    if res.reports:
        write_series(res.reports, cfg.output.path(cfg.output.series))
    return EXIT_MONITOR if _hard_failed(res.reports, cfg.monitor.hard_checks) else EXIT_OK


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except _UsageError as exc:
        print(f"haptofv: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = _load(args)
        if args.command == "validate-config":
            if args.print:
                sys.stdout.write(cfg.to_text())
            print(f"{args.config}: ok", file=sys.stderr)
            return EXIT_OK
        if args.command == "simulate":
            return _simulate(cfg, args)
        if args.command == "sweep":
            return _sweep(cfg)
        if args.command == "convergence":
            return _convergence(cfg)
        return _weakcheck(cfg, args.strict_defeq4)
    except (ConfigError, ValidationError, SnapshotError) as exc:
        print(f"haptofv: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (MonitorFailure, NegativityError) as exc:
        print(f"haptofv: {exc}", file=sys.stderr)
        return EXIT_MONITOR
    except OSError as exc:
        print(f"haptofv: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())

"""Positivity-preserving IMEX time stepping of the regularized system.

One step runs three stages, each of which maps nonnegative fields to
nonnegative fields:

1. explicit upwind haptotaxis plus explicit logistic growth ``beta*c1``;
2. Patankar-type implicit reactions: the ``c1 <-> c2`` exchange is solved
   as a 2x2 M-matrix system per cell (so it conserves ``c1 + c2`` exactly),
   all remaining sinks are divided out, cue production is explicit;
3. backward-Euler Neumann diffusion per species.

No stage clips.  A negative value after a step raises ``NegativityError``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .grid import Grid, divergence, taxis_velocity, upwind_fluxes
from .linsolve import implicit_diffusion
from .model import ModelParams, Regularization, ValidationError, int_power, saturation
from .monitors import MonitorConfig, MonitorFailure, Tracker

SPECIES = ("c1", "c2", "h", "tau")


class NegativityError(RuntimeError):
    """A step produced a negative density.  Indicates a scheme bug or a
    time step above the stability bound; values are never clipped."""


@dataclass(frozen=True)
class State:
    grid: Grid
    c1: np.ndarray
    c2: np.ndarray
    h: np.ndarray
    tau: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        for name in SPECIES:
            u = np.ascontiguousarray(getattr(self, name), dtype=float)
            if u.shape != self.grid.shape:
                raise ValueError(f"{name} has shape {u.shape}, grid expects {self.grid.shape}")
            object.__setattr__(self, name, u)

    def fields(self) -> tuple:
        return tuple(getattr(self, k) for k in SPECIES)

    def validate(self) -> "State":
        for name in SPECIES:
            u = getattr(self, name)
            if not np.all(np.isfinite(u)):
                raise ValidationError(f"state component {name} contains NaN or Inf")
            if np.any(u < 0.0):
                raise ValidationError(f"state component {name} is negative")
        return self

    def min(self) -> float:
        return min(float(np.min(u)) for u in self.fields())

    def equals(self, other: "State") -> bool:
        """Bit-exact equality (grid, clock and all cell values)."""
        return (
            self.grid == other.grid
            and self.t == other.t
            and all(np.array_equal(a, b) for a, b in zip(self.fields(), other.fields()))
        )


@dataclass(frozen=True)
class StepControl:
    dt_max: float = 1e-3
    cfl_safety: float = 0.9
    t_end: float = 1.0
    floor: float = 1e-12
    solver: str = "auto"
    cg_rtol: float = 1e-10

    def __post_init__(self):
        if not self.dt_max > 0.0:
            raise ValidationError(f"step.dt_max must be positive, got {self.dt_max}")
        if not (0.0 < self.cfl_safety <= 1.0):
            raise ValidationError(f"step.cfl_safety must lie in (0, 1], got {self.cfl_safety}")
        if not self.t_end >= 0.0:
            raise ValidationError(f"step.t_end must be nonnegative, got {self.t_end}")
        if not self.floor > 0.0:
            raise ValidationError(f"step.floor must be positive, got {self.floor}")
        if self.solver not in ("auto", "tridiagonal", "direct", "cg"):
            raise ValidationError(f"step.solver must be auto, tridiagonal, direct or cg, got {self.solver!r}")


def _velocity(p: ModelParams, s: State) -> tuple:
    return taxis_velocity(s.grid, [(p.b_h, s.h), (p.b_tau, s.tau)])


def outflow_rate(grid: Grid, velocity) -> np.ndarray:
    """Per-cell sum of outgoing face speeds divided by the spacing."""
    out = np.zeros(grid.shape)
    for axis, (v, dx) in enumerate(zip(velocity, grid.spacing)):
        lo = [slice(None)] * grid.dim
        hi = [slice(None)] * grid.dim
        lo[axis] = slice(None, -1)
        hi[axis] = slice(1, None)
        out[tuple(lo)] += np.maximum(v, 0.0) / dx
        out[tuple(hi)] += np.maximum(-v, 0.0) / dx
    return out


def _sink_rates(p: ModelParams, reg: Regularization, s: State) -> tuple:
    a1 = p.alpha1(s.tau)
    back = p.alpha2(s.tau) / (1.0 + reg.eps * s.c2)
    other = p.beta * (s.c1 + s.c2 + s.tau) + reg.eps * int_power(s.c1, reg.theta - 1)
    return a1, back, other


def stable_dt(p: ModelParams, reg: Regularization, s: State, ctl: StepControl) -> float:
    """Largest admissible step: ``cfl_safety * min(dt_max, advective, reaction)``.

    The advective bound ``1 / max_cell(sum of outgoing speeds / spacing)``
    is what keeps the explicit upwind stage nonnegative; it never exceeds
    ``h_min / max_face |velocity|``.
    """
    for name in SPECIES:
        if not np.all(np.isfinite(getattr(s, name))):
            raise ValidationError(f"state component {name} contains NaN or Inf")
    out = float(np.max(outflow_rate(s.grid, _velocity(p, s))))
    dt_adv = 1.0 / out if out > 0.0 else math.inf
    a1, back, other = _sink_rates(p, reg, s)
    rate = max(
        float(np.max(a1 + other)),
        float(np.max(back)),
        float(np.max(p.gamma1 * s.c1 + p.gamma2 * s.c2)) + p.mu,
        float(np.max(p.delta * s.c1)) + p.sigma,
        p.beta,
    )
    dt_react = 1.0 / rate if rate > 0.0 else math.inf
    dt = ctl.cfl_safety * min(ctl.dt_max, dt_adv, dt_react)
    if not dt > 0.0:
        raise ValidationError("no positive stable time step")
    return dt


def step(p: ModelParams, reg: Regularization, s: State, dt: float,
         solver: str = "auto", cg_rtol: float = 1e-10) -> State:
    """Advance ``s`` by ``dt``; see the module docstring for the stages."""
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    g = s.grid
    c1, c2, h, tau = s.fields()

    # stage 1: explicit transport and growth
    vel = _velocity(p, s)
    c1s = c1 - dt * divergence(g, upwind_fluxes(g, c1, vel)) + dt * p.beta * c1
    if np.any(c1s < 0.0):
        raise NegativityError(f"upwind stage went negative at t={s.t}: dt={dt} exceeds the advective bound")

    # stage 2: linearly implicit reactions, coefficients frozen at t_n
    a1, back, other = _sink_rates(p, reg, s)
    P = 1.0 + dt * (a1 + other)
    Q = 1.0 + dt * back
    det = 1.0 + dt * (a1 + other + back) + dt * dt * other * back
    c1n = (Q * c1s + dt * back * c2) / det
    c2n = (P * c2 + dt * a1 * c1s) / det
    prod = dt * saturation(c2)
    hn = (h + prod) / (1.0 + dt * (p.gamma1 * c1 + p.gamma2 * c2 + p.mu))
    taun = (tau + prod) / (1.0 + dt * (p.delta * c1 + p.sigma))

    # stage 3: implicit diffusion
    c1n = implicit_diffusion(g, c1n, p.a1, dt, solver, cg_rtol)
    c2n = implicit_diffusion(g, c2n, p.a2, dt, solver, cg_rtol)
    hn = implicit_diffusion(g, hn, reg.eps, dt, solver, cg_rtol)
    taun = implicit_diffusion(g, taun, reg.eps, dt, solver, cg_rtol)

    out = State(g, c1n, c2n, hn, taun, s.t + dt)
    for name in SPECIES:
        u = getattr(out, name)
        if not np.all(np.isfinite(u)):
            raise NegativityError(f"{name} became non-finite at t={out.t}")
        if np.any(u < 0.0):
            raise NegativityError(f"{name} went negative at t={out.t} (min {u.min():.3e})")
    return out


@dataclass
class Trajectory:
    """States saved on a uniform time grid (arrays stacked along axis 0)."""

    grid: Grid
    times: np.ndarray
    c1: np.ndarray
    c2: np.ndarray
    h: np.ndarray
    tau: np.ndarray

    @classmethod
    def from_states(cls, states) -> "Trajectory":
        states = list(states)
        g = states[0].grid
        return cls(
            g,
            np.array([s.t for s in states]),
            *(np.stack([getattr(s, k) for s in states]) for k in SPECIES),
        )

    def state(self, i: int) -> State:
        return State(self.grid, self.c1[i], self.c2[i], self.h[i], self.tau[i], float(self.times[i]))


@dataclass
class RunResult:
    state: State
    reports: list
    trajectory: Trajectory | None = None
    carry: dict | None = None
    steps: int = 0

    def __iter__(self):
        return iter((self.state, self.reports))

    def hard_failures(self, hard) -> list:
        return [(r.t, k) for r in self.reports for k in r.hard_failures(hard)]


def _event_time(k: int, cadence: float, t_end: float) -> float:
    return min(k * cadence, t_end)


def run(p: ModelParams, reg: Regularization, s0: State, ctl: StepControl,
        monitors: MonitorConfig | None = None, *, save_cadence: float | None = None,
        resume: dict | None = None, stop_at: float | None = None,
        diagnostic_path=None) -> RunResult:
    """Integrate from ``s0`` to ``ctl.t_end``.

    Steps are shortened to land exactly on report and save times
    (multiples of the respective cadence).  ``resume`` is the ``carry`` of
    an earlier ``RunResult``; ``stop_at`` halts early at a report time so
    the run can be checkpointed and resumed bit-exactly.
    """
    monitors = monitors or MonitorConfig()
    s0.validate()
    t_end = ctl.t_end
    t_stop = t_end if stop_at is None else min(stop_at, t_end)
    if resume is None:
        tracker = Tracker(p, reg, monitors, s0)
        k_rep, k_save, nsteps = 0, 0, 0
    else:
        tracker = Tracker(p, reg, monitors, s0, carry=resume["tracker"])
        k_rep, k_save, nsteps = resume["k_report"], resume["k_save"], resume["steps"]

    reports, saved = [], []
    s = s0
    if t_end <= s.t and resume is None:
        return RunResult(s, reports, None, None, 0)

    def emit(s):
        nonlocal k_rep, k_save
        if s.t >= _event_time(k_rep, monitors.cadence, t_end):
            rep = tracker.report(s)
            reports.append(rep)
            k_rep += 1
            failed = rep.hard_failures(monitors.hard_checks)
            if failed and monitors.abort_on_failure:
                if diagnostic_path is not None:
                    from .io import write_snapshot

                    write_snapshot(s, diagnostic_path)
                raise MonitorFailure(f"hard monitor failure at t={s.t}: {failed}", rep)
        if save_cadence is not None and s.t >= _event_time(k_save, save_cadence, t_end):
            saved.append(s)
            k_save += 1

    if resume is None:
        emit(s)
    while s.t < t_stop:
        targets = [_event_time(k_rep, monitors.cadence, t_end), t_stop]
        if save_cadence is not None:
            targets.append(_event_time(k_save, save_cadence, t_end))
        t_next = min(x for x in targets if x > s.t)
        dt = stable_dt(p, reg, s, ctl)
        if s.t + dt >= t_next:
            dt = t_next - s.t
            s = step(p, reg, s, dt, ctl.solver, ctl.cg_rtol)
            s = replace(s, t=t_next)
        else:
            s = step(p, reg, s, dt, ctl.solver, ctl.cg_rtol)
        nsteps += 1
        tracker.after_step(s, dt)
        emit(s)

    carry = {
        "tracker": tracker.state_dict(),
        "k_report": k_rep,
        "k_save": k_save,
        "steps": nsteps,
    }
    traj = Trajectory.from_states(saved) if saved else None
    return RunResult(s, reports, traj, carry, nsteps)

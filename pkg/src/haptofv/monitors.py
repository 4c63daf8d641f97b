"""Runtime instrumentation of the a priori estimates.

Every quantity is evaluated on the discrete state with the same quadratures
as the scheme: midpoint rule for cell integrals, face sums for gradients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import xlogy

from .grid import (
    Grid,
    grad_sq_quotient,
    integrate,
    integrate_grad_sq,
)
from .model import ModelParams, Regularization, ValidationError, int_power

INV_E = math.exp(-1.0)
BARRIER_SLACK = 1e-6
GRONWALL_SLACK = 1e-6

HARD_CHECKS = frozenset({
    "nonnegative",
    "mass_gronwall",
    "barrier_h",
    "barrier_tau",
    "entropy_finite",
    "dissipation_monotone",
    "c2_sq_monotone",
    "gradient_l2",
})
ALL_CHECKS = HARD_CHECKS | {"ledger"}


class MonitorFailure(RuntimeError):
    """A hard monitor check failed and the run was configured to abort."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True)
class MonitorConfig:
    cadence: float = 0.01
    hard_checks: frozenset = HARD_CHECKS
    floor: float = 1e-12
    ledger_tolerance_factor: float = 100.0
    abort_on_failure: bool = False

    def __post_init__(self):
        if not self.cadence > 0.0:
            raise ValidationError(f"monitor.cadence must be positive, got {self.cadence}")
        if not self.floor > 0.0:
            raise ValidationError(f"monitor.floor must be positive, got {self.floor}")
        unknown = set(self.hard_checks) - ALL_CHECKS
        if unknown:
            raise ValidationError(f"unknown monitor checks: {sorted(unknown)}")
        object.__setattr__(self, "hard_checks", frozenset(self.hard_checks))


@dataclass
class MonitorReport:
    t: float
    mass_c1: float
    mass_c2: float
    max_h: float
    max_tau: float
    M_h: float
    M_tau: float
    entropy_F: float
    dissipation_D: float
    dissipation_integral: float
    grad_h_sq: float
    grad_tau_sq: float
    c2_sq_integral: float
    ledger_residual: float
    floor_engaged: bool
    flags: dict = field(default_factory=dict)

    def hard_failures(self, hard=HARD_CHECKS) -> list:
        return [k for k, ok in self.flags.items() if k in hard and not ok]


def barriers(p: ModelParams, h0: np.ndarray, tau0: np.ndarray) -> tuple:
    """Sup-norm barriers for the cues, with the production term bounded by 1."""
    return 1.0 / p.mu + float(np.max(h0)), 1.0 / p.sigma + float(np.max(tau0))


def _ratio(a: float, b: float) -> float:
    # a zero taxis coefficient switches its term off, even when the
    # matching consumption rate is zero as well (decoupled test problems)
    return 0.0 if a == 0.0 else a / b


def xi_constant(p: ModelParams, M_h: float) -> float:
    """Weight of the chondrocyte entropy in the combined functional."""
    return (2.0 / p.a2) * ((4.0 * p.gamma2 * M_h + 1.0) * _ratio(p.b_h, p.gamma1)
                           + _ratio(p.b_tau, p.delta) + 1.0)


def _entropy_density(c: np.ndarray) -> np.ndarray:
    # c ln c + 1/e >= 0 analytically; the max only removes round-off at c = 1/e
    return np.maximum(xlogy(c, c) + INV_E, 0.0)


def _require_nonneg(s):
    for name in ("c1", "c2", "h", "tau"):
        if np.any(getattr(s, name) < 0.0):
            raise ValidationError(f"state component {name} is negative")


def entropy_terms(p: ModelParams, s, M_h: float, floor: float) -> tuple:
    """``(F, floor_engaged)`` for the combined entropy functional."""
    _require_nonneg(s)
    g = s.grid
    qh, eh = grad_sq_quotient(g, s.h, floor)
    qt, et = grad_sq_quotient(g, s.tau, floor)
    F = (
        integrate(g, _entropy_density(s.c1))
        + xi_constant(p, M_h) * integrate(g, _entropy_density(s.c2))
        + 0.5 * _ratio(p.b_h, p.gamma1) * qh
        + 0.5 * _ratio(p.b_tau, p.delta) * qt
    )
    return F, eh or et


def entropy_functional(p: ModelParams, s, M_h: float, floor: float = 1e-12) -> float:
    return entropy_terms(p, s, M_h, floor)[0]


def dissipation_terms(p: ModelParams, reg: Regularization, s, floor: float) -> tuple:
    _require_nonneg(s)
    g = s.grid
    q1, e1 = grad_sq_quotient(g, s.c1, floor)
    q2, e2 = grad_sq_quotient(g, s.c2, floor)
    wh, e3 = grad_sq_quotient(g, s.h, floor, weight=s.c1)
    wt, e4 = grad_sq_quotient(g, s.tau, floor, weight=s.c1)
    log2c = np.log(2.0 + s.c1)
    D = (
        0.25 * p.a1 * q1
        + 0.5 * q2
        + 0.5 * reg.eps * integrate(g, int_power(s.c1, reg.theta) * log2c)
        + 0.5 * p.beta * integrate(g, s.c1 * s.c1 * log2c)
        + 0.5 * p.b_h * wh
        + 0.5 * p.b_tau * wt
    )
    return D, e1 or e2 or e3 or e4


def dissipation_rate(p: ModelParams, reg: Regularization, s, floor: float = 1e-12) -> float:
    return dissipation_terms(p, reg, s, floor)[0]


def total_mass(s) -> float:
    return integrate(s.grid, s.c1) + integrate(s.grid, s.c2)


def ledger_rate(p: ModelParams, reg: Regularization, s) -> float:
    """Right-hand side of the cell-mass balance ``d/dt (int c1 + int c2)``."""
    g = s.grid
    c1 = s.c1
    return (
        p.beta * integrate(g, c1 * (1.0 - s.c2 - s.tau))
        - p.beta * integrate(g, c1 * c1)
        - reg.eps * integrate(g, int_power(c1, reg.theta))
    )


def ledger_check(p: ModelParams, reg: Regularization, prev, cur, dt: float) -> float:
    """Mass change over one step minus ``dt`` times the balance at the pre-step state."""
    return total_mass(cur) - total_mass(prev) - dt * ledger_rate(p, reg, prev)


def barrier_check(s, M_h: float, M_tau: float) -> dict:
    return {
        "barrier_h": float(np.max(s.h)) <= M_h * (1.0 + BARRIER_SLACK),
        "barrier_tau": float(np.max(s.tau)) <= M_tau * (1.0 + BARRIER_SLACK),
    }


def gradient_l2_check(s, M_h: float, M_tau: float, floor: float = 1e-12) -> dict:
    """``int |grad w|^2 <= M_w * int |grad w|^2 / w`` for both cues."""
    g = s.grid
    out = {}
    for name, w, M in (("h", s.h, M_h), ("tau", s.tau, M_tau)):
        lhs = integrate_grad_sq(g, w)
        rhs = M * grad_sq_quotient(g, w, floor)[0]
        out[name] = lhs <= rhs * (1.0 + BARRIER_SLACK) + 1e-300
    return {"gradient_l2": out["h"] and out["tau"]}


class Tracker:
    """Accumulates running integrals along a trajectory and emits reports.

    The carry (``state_dict``) is everything needed to resume bit-exactly.
    """

    def __init__(self, p: ModelParams, reg: Regularization, cfg: MonitorConfig, s0, carry=None):
        self.p, self.reg, self.cfg = p, reg, cfg
        if carry is None:
            self.M_h, self.M_tau = barriers(p, s0.h, s0.tau)
            self.mass0 = total_mass(s0)
            self.dissipation_integral = 0.0
            self.c2_sq_integral = 0.0
            self.last_report = None
            self.ledger_worst = 0.0
            self.ledger_ok = True
        else:
            self.__dict__.update({k: carry[k] for k in self._CARRY})
        self._refresh(s0)

    _CARRY = (
        "M_h", "M_tau", "mass0", "dissipation_integral", "c2_sq_integral",
        "last_report", "ledger_worst", "ledger_ok",
    )

    def state_dict(self) -> dict:
        return {k: getattr(self, k) for k in self._CARRY}

    def _refresh(self, s):
        self.D, self._D_floor = dissipation_terms(self.p, self.reg, s, self.cfg.floor)
        self.c2sq = integrate(s.grid, s.c2 * s.c2)
        self.mass = total_mass(s)
        self.rate = ledger_rate(self.p, self.reg, s)

    def after_step(self, s_new, dt: float):
        mass_prev, rate_prev, D_prev, c2sq_prev = self.mass, self.rate, self.D, self.c2sq
        self._refresh(s_new)
        residual = self.mass - mass_prev - dt * rate_prev
        if abs(residual) > abs(self.ledger_worst):
            self.ledger_worst = residual
        scale = max(mass_prev, 1e-300)
        if abs(residual) > self.cfg.ledger_tolerance_factor * dt * dt * scale:
            self.ledger_ok = False
        self.dissipation_integral += 0.5 * dt * (D_prev + self.D)
        self.c2_sq_integral += 0.5 * dt * (c2sq_prev + self.c2sq)

    def report(self, s) -> MonitorReport:
        p, g = self.p, s.grid
        F, eF = entropy_terms(p, s, self.M_h, self.cfg.floor)
        grad_h_sq = integrate_grad_sq(g, s.h)
        grad_tau_sq = integrate_grad_sq(g, s.tau)
        m1, m2 = integrate(g, s.c1), integrate(g, s.c2)
        prev = self.last_report
        flags = {
            "nonnegative": all(float(np.min(getattr(s, k))) >= 0.0 for k in ("c1", "c2", "h", "tau")),
            "mass_gronwall": m1 + m2 <= math.exp(p.beta * s.t) * self.mass0 * (1.0 + GRONWALL_SLACK),
            **barrier_check(s, self.M_h, self.M_tau),
            "entropy_finite": math.isfinite(F) and F >= 0.0,
            "dissipation_monotone": math.isfinite(self.dissipation_integral)
            and (prev is None or self.dissipation_integral >= prev[0]),
            "c2_sq_monotone": math.isfinite(self.c2_sq_integral)
            and (prev is None or self.c2_sq_integral >= prev[1]),
            **gradient_l2_check(s, self.M_h, self.M_tau, self.cfg.floor),
            "ledger": self.ledger_ok,
        }
        rep = MonitorReport(
            t=s.t,
            mass_c1=m1,
            mass_c2=m2,
            max_h=float(np.max(s.h)),
            max_tau=float(np.max(s.tau)),
            M_h=self.M_h,
            M_tau=self.M_tau,
            entropy_F=F,
            dissipation_D=self.D,
            dissipation_integral=self.dissipation_integral,
            grad_h_sq=grad_h_sq,
            grad_tau_sq=grad_tau_sq,
            c2_sq_integral=self.c2_sq_integral,
            ledger_residual=self.ledger_worst,
            floor_engaged=bool(eF or self._D_floor),
            flags=flags,
        )
        self.last_report = (self.dissipation_integral, self.c2_sq_integral)
        self.ledger_worst = 0.0
        self.ledger_ok = True
        return rep


def entropy_cap(reports, eta: float, fit_fraction: float = 0.1, slack: float = 0.1):
    """Soft Gronwall-shaped cap on the entropy.

    The rate constant ``C`` of ``F' + eta*F + D <= C`` is fitted as the
    largest finite-difference value over the first ``fit_fraction`` of the
    run; the cap is ``2*(F(0) + C/eta*(1 - exp(-eta t)))``.  Returns
    ``(passed, C, caps)`` where ``passed`` means ``F <= (1+slack)*cap`` on
    every report after the fit window.
    """
    if len(reports) < 2:
        return True, 0.0, [2.0 * r.entropy_F for r in reports]
    t0, t_end = reports[0].t, reports[-1].t
    t_fit = t0 + fit_fraction * (t_end - t0)
    C = 0.0
    for a, b in zip(reports, reports[1:]):
        if b.t > t_fit + 1e-12 * max(1.0, abs(t_fit)):
            break
        dFdt = (b.entropy_F - a.entropy_F) / (b.t - a.t)
        C = max(C, dFdt + eta * b.entropy_F + b.dissipation_D)
    F0 = reports[0].entropy_F
    caps = [2.0 * (F0 + C / eta * (1.0 - math.exp(-eta * (r.t - t0)))) for r in reports]
    passed = all(
        r.entropy_F <= (1.0 + slack) * cap
        for r, cap in zip(reports, caps)
        if r.t > t_fit
    )
    return passed, C, caps

"""Weak-form residuals, an ODE oracle, epsilon sweeps and manufactured
convergence studies.

Weak residuals test a stored trajectory against the space-time integral
identities of a weak solution.  With ``phi = X(x) Theta(t)`` and
``Theta(T) = 0`` each identity reads

    -int int u phi_t - int u0 phi(., 0) = RHS[u; phi]

and the residual is ``LHS - RHS``.  Space integrals use the midpoint rule,
gradient pairings the interior faces (with the arithmetic face mean of
``c1`` as weight in the haptotaxis pairings), time integrals the trapezoid
rule over the save times.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .grid import Grid
from .model import ModelParams, Regularization, TransitionFn, ValidationError, int_power, reaction_rhs
from .monitors import MonitorConfig
from .stepper import SPECIES, State, StepControl, Trajectory, run, step

EQUATIONS = SPECIES
THREADS_ENV = "HAPTOFV_THREADS"


@dataclass(frozen=True)
class TestFunction:
    """``phi(x, t) = prod_i cos(k_i pi x_i / L_i) * (1 - t/T)**q``.

    Cosine modes have zero normal derivative on the box boundary and
    ``q >= 2`` makes ``phi`` vanish together with its time derivative at
    ``t = T``.
    """

    __test__ = False  # not a pytest class

    modes: tuple = (0,)
    T: float = 1.0
    q: int = 3

    def __post_init__(self):
        if self.q < 2:
            raise ValidationError(f"test function exponent q must be >= 2, got {self.q}")
        if not self.T > 0.0:
            raise ValidationError(f"test function horizon T must be positive, got {self.T}")
        if any(int(k) != k or k < 0 for k in self.modes):
            raise ValidationError(f"cosine modes must be nonnegative integers, got {self.modes}")
        object.__setattr__(self, "modes", tuple(int(k) for k in self.modes))

    def space(self, grid: Grid) -> np.ndarray:
        modes = self.modes * grid.dim if len(self.modes) == 1 else self.modes
        if len(modes) != grid.dim:
            raise ValueError(f"test function has {len(self.modes)} modes for a {grid.dim}D grid")
        X = np.ones(grid.shape)
        for x, k, L in zip(grid.mesh(), modes, grid.lengths):
            X = X * np.cos(k * np.pi * x / L)
        return X

    def time(self, t):
        s = np.clip(1.0 - np.asarray(t, dtype=float) / self.T, 0.0, None)
        return s**self.q

    def dtime(self, t):
        s = np.clip(1.0 - np.asarray(t, dtype=float) / self.T, 0.0, None)
        return -self.q / self.T * s ** (self.q - 1)

    def sample(self, grid: Grid, times) -> tuple:
        """``(phi, phi_t)`` at ``times``, stacked along axis 0."""
        X = self.space(grid)
        th, dth = self.time(times), self.dtime(times)
        expand = (slice(None),) + (None,) * grid.dim
        return th[expand] * X, dth[expand] * X


def _space_int(grid: Grid, u: np.ndarray) -> np.ndarray:
    """Midpoint rule over space for stacked fields (axis 0 = time)."""
    return u.reshape(u.shape[0], -1).sum(axis=1) * grid.cell_volume


def _pairing(grid: Grid, u: np.ndarray, phi: np.ndarray, weight=None) -> np.ndarray:
    """Face quadrature of ``int [w] grad u . grad phi`` per time slice."""
    total = np.zeros(u.shape[0])
    for axis, dx in enumerate(grid.spacing, start=1):
        q = np.diff(u, axis=axis) * np.diff(phi, axis=axis) / (dx * dx)
        if weight is not None:
            n = weight.shape[axis]
            q = q * 0.5 * (weight.take(range(n - 1), axis=axis) + weight.take(range(1, n), axis=axis))
        total += q.reshape(q.shape[0], -1).sum(axis=1)
    return total * grid.cell_volume


def _check_times(times: np.ndarray) -> None:
    if times.ndim != 1 or len(times) < 2:
        raise ValueError("trajectory needs at least two save times")
    gaps = np.diff(times)
    if np.any(gaps <= 0.0) or np.ptp(gaps) > 1e-9 * max(1.0, float(times[-1])):
        raise ValueError("trajectory save times must be uniform and increasing")


def weak_residual(traj: Trajectory, p: ModelParams, phi, equation: str,
                  reg: Regularization | None = None, strict_defeq4: bool = False) -> float:
    """Signed residual ``LHS - RHS`` of one weak identity.

    ``phi`` is a :class:`TestFunction` or a pair ``(phi, phi_t)`` of arrays
    sampled at ``traj.times``.  With ``reg`` (``eps > 0``) the identities of
    the regularized problem are used: ``F_eps(c2)`` in the exchange, the
    damping ``-eps c1**theta`` and artificial cue diffusion.  Without it
    the limit identities apply, in which ``h`` and ``tau`` carry no gradient
    terms.  The ``tau`` identity uses the production source
    ``+c2/(1+c2)``; ``strict_defeq4=True`` flips it to ``-c2/(1+c2)``.
    """
    if equation not in EQUATIONS:
        raise ValueError(f"equation must be one of {EQUATIONS}, got {equation!r}")
    g, times = traj.grid, np.asarray(traj.times, dtype=float)
    _check_times(times)
    c1, c2, h, tau = traj.c1, traj.c2, traj.h, traj.tau
    expected = (len(times),) + g.shape
    for name, u in zip(SPECIES, (c1, c2, h, tau)):
        if u.shape != expected:
            raise ValueError(f"trajectory field {name} has shape {u.shape}, expected {expected}")
    if isinstance(phi, TestFunction):
        Phi, Phi_t = phi.sample(g, times)
    else:
        Phi, Phi_t = (np.asarray(a, dtype=float) for a in phi)
        if Phi.shape != expected or Phi_t.shape != expected:
            raise ValueError(f"sampled test function must have shape {expected}")
    eps = 0.0 if reg is None else reg.eps
    u = {"c1": c1, "c2": c2, "h": h, "tau": tau}[equation]

    # -int u phi_t dt (integrand) and the initial-data term
    lhs = -_space_int(g, u * Phi_t)
    init = -float(_space_int(g, u[:1] * Phi[:1])[0])

    a1, a2 = p.alpha1(tau), p.alpha2(tau)
    sat = c2 / (1.0 + c2)
    if equation == "c1":
        rhs = (-p.a1 * _pairing(g, c1, Phi)
               + p.b_h * _pairing(g, h, Phi, c1)
               + p.b_tau * _pairing(g, tau, Phi, c1))
        react = -a1 * c1 + a2 * c2 / (1.0 + eps * c2) + p.beta * c1 * (1.0 - c1 - c2 - tau)
        if eps > 0.0:
            react = react - eps * int_power(c1, reg.theta)
        rhs = rhs + _space_int(g, react * Phi)
    elif equation == "c2":
        rhs = -p.a2 * _pairing(g, c2, Phi) + _space_int(g, (a1 * c1 - a2 * c2 / (1.0 + eps * c2)) * Phi)
    elif equation == "h":
        rhs = _space_int(g, (-p.gamma1 * h * c1 - p.gamma2 * h * c2 - p.mu * h + sat) * Phi)
        if eps > 0.0:
            rhs = rhs - eps * _pairing(g, h, Phi)
    else:
        source = -sat if strict_defeq4 else sat
        rhs = _space_int(g, (-p.delta * tau * c1 - p.sigma * tau + source) * Phi)
        if eps > 0.0:
            rhs = rhs - eps * _pairing(g, tau, Phi)
    return float(np.trapezoid(lhs - rhs, times) + init)


def default_test_functions(T: float, modes=(0, 1, 2), q: int = 3) -> list:
    return [TestFunction((k,), T, q) for k in modes]


def all_residuals(traj: Trajectory, p: ModelParams, tests, reg=None, strict_defeq4=False) -> dict:
    """``{equation: [residual per test function]}``."""
    return {eq: [weak_residual(traj, p, phi, eq, reg, strict_defeq4) for phi in tests] for eq in EQUATIONS}


# ---------------------------------------------------------------------------
# ODE oracle for spatially uniform states


def ode_oracle(p: ModelParams, reg: Regularization, y0, times, rtol: float = 1e-12,
               atol: float = 1e-14) -> np.ndarray:
    """High-accuracy solution of the reaction system from uniform data.

    Returns an array of shape ``(len(times), 4)`` in species order.
    """
    def rhs(_t, y):
        y = np.maximum(y, 0.0)
        return np.array(reaction_rhs(p, reg, *y))

    times = np.asarray(times, dtype=float)
    sol = solve_ivp(rhs, (float(times[0]), float(times[-1])), np.asarray(y0, dtype=float),
                    method="Radau", t_eval=times, rtol=rtol, atol=atol)
    if not sol.success:
        raise RuntimeError(f"ODE oracle failed: {sol.message}")
    return sol.y.T


def uniform_state(grid: Grid, y0) -> State:
    return State(grid, *(grid.full(v) for v in y0), 0.0)


def fixed_step_run(p: ModelParams, reg: Regularization, s0: State, dt: float, t_end: float,
                   save_every: int = 1, solver: str = "auto") -> Trajectory:
    """Plain loop with a constant step (no monitors).  ``t_end/dt`` must be
    an integer; states are kept every ``save_every`` steps."""
    n = round(t_end / dt)
    if abs(n * dt - t_end) > 1e-9 * max(1.0, t_end):
        raise ValueError(f"t_end={t_end} is not a multiple of dt={dt}")
    states, s = [s0], s0
    for i in range(1, n + 1):
        s = step(p, reg, s, dt, solver)
        s = State(s.grid, s.c1, s.c2, s.h, s.tau, i * dt)
        if i % save_every == 0:
            states.append(s)
    return Trajectory.from_states(states)


# ---------------------------------------------------------------------------
# epsilon sweep


@dataclass
class SweepResult:
    eps_list: tuple
    times: np.ndarray
    pairwise_l2: dict
    weak_residuals: dict
    finals: list = field(default_factory=list, repr=False)

    def ratio(self, species: str = "c1") -> float:
        d = self.pairwise_l2[species]
        return d[-1] / d[0] if len(d) >= 1 and d[0] > 0 else math.nan


def space_time_l2(grid: Grid, times, a: np.ndarray, b: np.ndarray) -> float:
    """``||a - b||`` in ``L2(Omega x (0, T))`` (midpoint x trapezoid)."""
    d = a - b
    return math.sqrt(max(float(np.trapezoid(_space_int(grid, d * d), times)), 0.0))


def _sweep_member(args):
    p, reg, s0, ctl, monitors, save_cadence = args
    res = run(p, reg, s0, ctl, monitors, save_cadence=save_cadence)
    return res.trajectory


def worker_count(n_jobs: int) -> int:
    raw = os.environ.get(THREADS_ENV, "")
    try:
        want = int(raw) if raw else (os.cpu_count() or 1)
    except ValueError:
        raise ValidationError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return max(1, min(want, n_jobs))


def epsilon_sweep(p: ModelParams, s0: State, ctl: StepControl, eps_list, theta: int = 4,
                  monitors: MonitorConfig | None = None, save_cadence: float | None = None,
                  tests=None) -> SweepResult:
    """Run the regularized problem for each ``eps`` and compare neighbours.

    All members share grid, step control and save times, so no
    interpolation is involved.  Members run in worker processes when
    more than one worker is available (``HAPTOFV_THREADS``).
    """
    eps_list = tuple(float(e) for e in eps_list)
    if not eps_list or any(not 0.0 < e < 1.0 for e in eps_list):
        raise ValidationError("eps_list entries must lie in (0, 1)")
    if any(b > a for a, b in zip(eps_list, eps_list[1:])):
        raise ValidationError("eps_list must be decreasing")
    monitors = monitors or MonitorConfig(cadence=ctl.t_end if ctl.t_end > 0 else 1.0)
    save_cadence = save_cadence or min(ctl.t_end / 200.0, ctl.dt_max)
    tests = tests if tests is not None else default_test_functions(ctl.t_end)
    regs = [Regularization(e, theta) for e in eps_list]
    jobs = [(p, r, s0, ctl, monitors, save_cadence) for r in regs]
    workers = worker_count(len(jobs))
    trajs = []
    if workers == 1:
        for r, job in zip(regs, jobs):
            try:
                trajs.append(_sweep_member(job))
            except Exception as exc:
                raise RuntimeError(f"sweep member eps={r.eps} failed: {exc}") from exc
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_sweep_member, job) for job in jobs]
            for r, fut in zip(regs, futures):
                try:
                    trajs.append(fut.result())
                except Exception as exc:
                    raise RuntimeError(f"sweep member eps={r.eps} failed: {exc}") from exc
    times = trajs[0].times
    pairwise = {
        sp: [space_time_l2(s0.grid, times, getattr(a, sp), getattr(b, sp)) for a, b in zip(trajs, trajs[1:])]
        for sp in SPECIES
    }
    residuals = {r.eps: all_residuals(tr, p, tests, r) for r, tr in zip(regs, trajs)}
    return SweepResult(eps_list, times, pairwise, residuals, [tr.state(-1) for tr in trajs])


# ---------------------------------------------------------------------------
# manufactured solutions


@dataclass
class ConvergenceResult:
    kind: str
    n_list: tuple
    dts: tuple
    errors: tuple
    orders: tuple


def observed_orders(errors, factor: float = 2.0) -> tuple:
    return tuple(math.log(a / b) / math.log(factor) if a > 0 and b > 0 else math.nan
                 for a, b in zip(errors, errors[1:]))


def decoupled_params(**overrides) -> ModelParams:
    """Parameters for species-decoupled tests: no exchange, no taxis."""
    base = dict(b_h=0.0, b_tau=0.0, gamma1=0.0, gamma2=0.0, delta=0.0,
                alpha1=TransitionFn.constant(0.0), alpha2=TransitionFn.constant(0.0))
    base.update(overrides)
    return ModelParams(**base)


def heat_error(n: int, dt: float, a2: float = 0.1, length: float = 1.0, t_end: float = 1.0,
               offset: float = 1.0, amplitude: float = 1.0) -> float:
    """L2 error at ``t_end`` of the c2 heat test.

    The data is ``offset + amplitude*cos(pi x/L)``; the exact solution
    decays the cosine by ``exp(-a2 (pi/L)^2 t)``.  ``c1 = 0`` and the
    exchange rates vanish, so ``c2`` evolves by pure diffusion.
    """
    p = decoupled_params(a2=a2)
    reg = Regularization(0.0, 4)
    g = Grid.uniform(n, length)
    x = g.centers(0)
    c2 = offset + amplitude * np.cos(np.pi * x / length)
    s0 = State(g, g.zeros(), c2, g.full(0.5), g.full(0.5))
    traj = fixed_step_run(p, reg, s0, dt, t_end, save_every=round(t_end / dt))
    exact = offset + amplitude * math.exp(-a2 * (np.pi / length) ** 2 * t_end) * np.cos(np.pi * x / length)
    d = traj.c2[-1] - exact
    return math.sqrt(float(np.sum(d * d)) * g.cell_volume)


def decay_error(species: str, dt: float, rate: float = 0.5, n: int = 16, t_end: float = 1.0,
                value: float = 0.5) -> float:
    """Relative error at ``t_end`` of ``w' = -rate*w`` for ``w = h`` or ``tau``."""
    if species not in ("h", "tau"):
        raise ValueError("decay tests exist for h and tau")
    p = decoupled_params(mu=rate, sigma=rate)
    g = Grid.uniform(n)
    s0 = State(g, g.zeros(), g.zeros(), g.full(value), g.full(value))
    traj = fixed_step_run(p, Regularization(0.05, 4), s0, dt, t_end, save_every=round(t_end / dt))
    exact = value * math.exp(-rate * t_end)
    return float(np.max(np.abs(getattr(traj, species)[-1] - exact))) / exact


def manufactured_convergence(kind: str = "heat", n_list=(16, 32, 64, 128), dt_list=None,
                             **kwargs) -> ConvergenceResult:
    """Observed orders for the decoupled verification problems.

    ``heat``: spatial refinement over ``n_list`` with ``dt = (L/N)**2``
    (so the first-order time error shrinks like ``h**2``).
    ``h`` / ``tau``: temporal refinement over ``dt_list``.
    """
    if kind == "heat":
        length = kwargs.get("length", 1.0)
        dts = tuple((length / n) ** 2 for n in n_list)
        errs = tuple(heat_error(n, dt, **kwargs) for n, dt in zip(n_list, dts))
        return ConvergenceResult(kind, tuple(n_list), dts, errs, observed_orders(errs))
    dts = tuple(dt_list or (4e-3, 2e-3, 1e-3))
    errs = tuple(decay_error(kind, dt, **kwargs) for dt in dts)
    return ConvergenceResult(kind, (), dts, errs, observed_orders(errs))


# ---------------------------------------------------------------------------
# randomized problems


def random_problem(rng: np.random.Generator, dim: int = 1, n: int = 128,
                   lo: float = 0.01, hi: float = 2.0) -> tuple:
    """Random positive parameters in ``[lo, hi]`` and random smooth bumps.

    Returns ``(params, reg, state)``; ``eps`` is drawn from ``[lo, 0.5]``.
    """
    u = lambda: float(rng.uniform(lo, hi))  # noqa: E731
    p = ModelParams(
        a1=u(), a2=u(), b_h=u(), b_tau=u(), beta=u(), gamma1=u(), gamma2=u(),
        delta=u(), mu=u(), sigma=u(),
        alpha1=TransitionFn.saturating(u(), u()),
        alpha2=TransitionFn.saturating(u(), u()) if rng.random() < 0.5 else TransitionFn.constant(u()),
    )
    reg = Regularization(float(rng.uniform(lo, 0.5)), 4)
    g = Grid.uniform(n, 1.0, dim)
    X = g.mesh()

    def cosine():
        wave = np.ones(g.shape)
        for x in X:
            wave = wave * np.cos(rng.integers(0, 3) * np.pi * x)
        offset = rng.uniform(0.05, 1.0)
        return offset + rng.uniform(0.0, 0.95) * offset * wave

    def gaussian():
        r2 = sum((x - rng.uniform(0.2, 0.8)) ** 2 for x in X)
        return rng.uniform(1e-3, 0.1) + rng.uniform(0.0, 1.0) * np.exp(-r2 / (2 * rng.uniform(0.05, 0.3) ** 2))

    s = State(g, gaussian(), cosine(), cosine(), cosine(), 0.0)
    return p, reg, s

import math

import numpy as np
import pytest

from haptofv.analysis import decoupled_params, uniform_state
from haptofv.grid import Grid
from haptofv.model import ModelParams, Regularization, ValidationError
from haptofv.monitors import (
    INV_E,
    MonitorConfig,
    barrier_check,
    barriers,
    dissipation_rate,
    entropy_cap,
    entropy_functional,
    gradient_l2_check,
    ledger_check,
    xi_constant,
)
from haptofv.stepper import State, StepControl, run

P = ModelParams()


def test_xi_hand_formula():
    for a2, bh, bt, g1, g2, d, M in [(0.02, 0.2, 0.2, 0.5, 0.3, 0.4, 2.6),
                                     (1.3, 0.7, 0.01, 1.9, 0.05, 0.6, 11.0),
                                     (0.5, 2.0, 1.5, 0.1, 1.0, 2.0, 1.0)]:
        p = ModelParams(a2=a2, b_h=bh, b_tau=bt, gamma1=g1, gamma2=g2, delta=d)
        hand = 2 / a2 * ((4 * g2 * M + 1) * bh / g1 + bt / d + 1)
        assert xi_constant(p, M) == pytest.approx(hand, rel=1e-15)


def test_entropy_at_inverse_e():
    g = Grid.uniform(10)
    s = uniform_state(g, (INV_E, INV_E, 0.5, 0.3))
    assert entropy_functional(P, s, 3.0) == pytest.approx(0.0, abs=1e-15)


def test_entropy_zero_cells():
    g = Grid(1, (10,), (2.0,))
    s = uniform_state(g, (0.0, 0.0, 0.5, 0.3))
    M_h = 2.5
    assert entropy_functional(P, s, M_h) == pytest.approx((1 + xi_constant(P, M_h)) * 2.0 / math.e, rel=1e-14)


def test_entropy_gradient_term_oracle():
    g = Grid.uniform(1024)
    s = State(g, g.full(INV_E), g.full(INV_E), np.exp(g.centers(0)), g.full(0.3))
    F = entropy_functional(P, s, 4.0)
    expected = P.b_h / (2 * P.gamma1) * (math.e - 1)
    assert abs(F - expected) / expected < 1e-3


def test_entropy_rejects_negative():
    g = Grid.uniform(4)
    with pytest.raises(ValidationError):
        entropy_functional(P, uniform_state(g, (-1.0, 0, 0.1, 0.1)), 1.0)
    with pytest.raises(ValidationError):
        dissipation_rate(P, Regularization(), uniform_state(g, (0.1, 0, -0.1, 0.1)))


def test_dissipation_examples(rng):
    g = Grid(1, (8,), (3.0,))
    assert dissipation_rate(P, Regularization(), uniform_state(g, (0.0, 0.2, 0.5, 0.3))) == 0.0
    D = dissipation_rate(P, Regularization(0.0, 4), uniform_state(g, (1.0, 0.2, 0.5, 0.3)))
    assert D == pytest.approx(P.beta / 2 * 3.0 * math.log(3.0), rel=1e-14)
    for _ in range(5):
        s = State(g, *(rng.random(8) for _ in range(4)))
        assert dissipation_rate(P, Regularization(), s) >= 0.0


def test_ledger_zero_pair():
    g = Grid.uniform(6)
    z = uniform_state(g, (0, 0, 0, 0))
    assert ledger_check(P, Regularization(), z, z, 1e-3) == 0.0


def test_barrier_h_decay():
    g = Grid.uniform(8)
    p = decoupled_params(mu=1.0)
    s0 = uniform_state(g, (0.0, 0.0, 0.5, 0.5))
    M_h, M_tau = barriers(p, s0.h, s0.tau)
    assert M_h == 1.5
    res = run(p, Regularization(0.05, 4), s0, StepControl(t_end=1.0), MonitorConfig(cadence=0.1))
    assert all(r.flags["barrier_h"] for r in res.reports)
    assert res.reports[-1].max_h == pytest.approx(0.5 * math.exp(-1.0), rel=1e-3)


def test_barrier_tau_saturated_source():
    g = Grid.uniform(8)
    p = decoupled_params(sigma=2.0, mu=2.0, beta=0.0)
    s0 = uniform_state(g, (0.0, 1e9, 1.0, 1.0))
    M_h, M_tau = barriers(p, s0.h, s0.tau)
    assert M_tau == 1.5
    res = run(p, Regularization(0.05, 4), s0, StepControl(t_end=2.0), MonitorConfig(cadence=0.25))
    for r in res.reports:
        assert r.flags["barrier_tau"]
        assert r.max_tau == pytest.approx(0.5 + 0.5 * math.exp(-2 * r.t), rel=3e-3)


def test_barrier_zero_everything():
    g = Grid.uniform(8)
    s = uniform_state(g, (0, 0, 0, 0))
    assert barrier_check(s, *barriers(P, s.h, s.tau)) == {"barrier_h": True, "barrier_tau": True}


def test_gradient_l2_examples():
    g = Grid.uniform(1024)
    s = State(g, g.zeros(), g.zeros(), g.full(0.4), g.full(0.4))
    assert gradient_l2_check(s, 1.0, 1.0) == {"gradient_l2": True}
    h = np.exp(g.centers(0))
    s = State(g, g.zeros(), g.zeros(), h, g.full(0.4))
    from haptofv.grid import grad_sq_quotient, integrate_grad_sq

    lhs = integrate_grad_sq(g, h)
    assert lhs == pytest.approx((math.e**2 - 1) / 2, rel=1e-3)
    assert grad_sq_quotient(g, h, 1e-12)[0] == pytest.approx(math.e - 1, rel=1e-3)
    assert gradient_l2_check(s, math.e, 1.0)["gradient_l2"]


def test_report_quantities_deterministic():
    g = Grid.uniform(32)
    x = g.centers(0)
    s = State(g, 0.2 + 0.1 * np.cos(np.pi * x), g.full(0.1), 0.5 + 0.2 * np.cos(np.pi * x), g.full(0.3))
    a = run(P, Regularization(), s, StepControl(t_end=0.05))
    b = run(P, Regularization(), s, StepControl(t_end=0.05))
    assert a.reports == b.reports
    assert all(r.flags["ledger"] for r in a.reports)


def test_monitor_config_validation():
    with pytest.raises(ValidationError):
        MonitorConfig(cadence=0.0)
    with pytest.raises(ValidationError):
        MonitorConfig(hard_checks={"bogus"})


def test_entropy_cap_shape():
    class R:
        def __init__(self, t, F, D):
            self.t, self.entropy_F, self.dissipation_D = t, F, D

    reps = [R(0.1 * k, 1.0 + 0.05 * k, 0.1) for k in range(21)]
    ok, C, caps = entropy_cap(reps, eta=0.5)
    assert ok and C > 0 and caps[0] == 2.0
    bad = reps[:-1] + [R(2.0, 100.0, 0.1)]
    assert not entropy_cap(bad, eta=0.5)[0]

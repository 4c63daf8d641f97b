import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from haptofv.model import (
    DomainError,
    ModelParams,
    Regularization,
    TransitionFn,
    ValidationError,
    alpha_eval,
    f_eps,
    int_power,
    reaction_rhs,
)

eps_st = st.floats(min_value=1e-6, max_value=1 - 1e-9, allow_nan=False, exclude_max=True)
s_st = st.floats(min_value=0.0, max_value=1e12, allow_nan=False)
state_st = st.tuples(*(st.floats(0.0, 50.0) for _ in range(4)))


def test_f_eps_examples():
    assert f_eps(0.5, 0.0) == 0.0
    assert f_eps(0.5, 2.0) == 1.0
    v = f_eps(0.1, 1e6)
    assert v < 10.0 and abs(v - 1e6 / (1 + 1e5)) == 0.0 and 10.0 - v < 1e-3


@pytest.mark.parametrize("eps,s", [(0.0, 1.0), (1.0, 1.0), (-0.1, 1.0), (0.5, -1e-300), (0.5, math.nan)])
def test_f_eps_domain(eps, s):
    with pytest.raises(DomainError):
        f_eps(eps, s)


@given(eps_st, s_st)
def test_f_eps_bounds(eps, s):
    v = f_eps(eps, s)
    assert 0.0 <= v <= s
    assert v < 1.0 / eps


@given(eps_st, s_st, s_st)
def test_f_eps_monotone(eps, s, t):
    a, b = sorted((s, t))
    assert f_eps(eps, a) <= f_eps(eps, b)


def test_alpha_examples():
    assert alpha_eval(TransitionFn.constant(0.3), 7.2) == 0.3
    sat = TransitionFn.saturating(0.2, 0.4)
    assert alpha_eval(sat, 0.0) == 0.2
    assert alpha_eval(sat, 1.0) == pytest.approx(0.4, abs=1e-15)
    with pytest.raises(DomainError):
        alpha_eval(sat, -1.0)


@given(st.floats(0.01, 5.0), st.floats(0.0, 5.0))
def test_alpha_range(a, b):
    fn = TransitionFn.saturating(a, b)
    z = np.linspace(0.0, 1e4, 2001)
    vals = fn(z)
    assert np.all(vals > 0.0) and np.all(vals <= fn.cap)


def test_transition_validation():
    with pytest.raises(ValidationError):
        TransitionFn("linear", 1.0, 0.0)
    with pytest.raises(ValidationError):
        TransitionFn.constant(-1.0)
    with pytest.raises(ValidationError):
        TransitionFn("constant", 0.1, 0.2)


def test_int_power():
    x = np.array([0.0, 0.5, 1.5, 3.0])
    for n in range(0, 9):
        np.testing.assert_allclose(int_power(x, n), x**n, rtol=1e-15)
    assert int_power(2.0, 10) == 1024.0
    with pytest.raises(DomainError):
        int_power(2.0, -1)


def test_reaction_zero_state():
    r = reaction_rhs(ModelParams(), Regularization(), 0.0, 0.0, 0.0, 0.0)
    assert tuple(r) == (0.0, 0.0, 0.0, 0.0)


def test_reaction_hand_values():
    M = 0.7
    p = ModelParams(alpha2=TransitionFn.constant(M))
    r = reaction_rhs(p, Regularization(0.5, 4), 0.0, 1.0, 0.0, 0.0)
    assert r.r_c1 == pytest.approx(M * 2 / 3, rel=1e-15)
    assert r.r_c2 == pytest.approx(-M * 2 / 3, rel=1e-15)
    assert r.r_h == 0.5 and r.r_tau == 0.5


@given(state_st, eps_st)
def test_exchange_cancels(state, eps):
    c1, c2, h, tau = state
    p, reg = ModelParams(), Regularization(eps, 4)
    r = reaction_rhs(p, reg, c1, c2, h, tau)
    growth = p.beta * c1 * (1 - c1 - c2 - tau) - eps * c1**4
    scale = 1.0 + abs(r.r_c1) + abs(growth)
    assert abs(r.r_c1 + r.r_c2 - growth) <= 1e-12 * scale


@given(state_st)
def test_cue_comparison(state):
    c1, c2, h, tau = state
    p = ModelParams()
    r = reaction_rhs(p, Regularization(), c1, c2, h, tau)
    assert r.r_h <= -p.mu * h + 1.0
    assert r.r_tau <= -p.sigma * tau + 1.0


def test_reaction_rejects_negative():
    with pytest.raises(DomainError):
        reaction_rhs(ModelParams(), Regularization(), -1e-3, 0.0, 0.0, 0.0)


def test_params_validation():
    with pytest.raises(ValidationError):
        ModelParams(mu=-1.0)
    with pytest.raises(ValidationError):
        ModelParams(beta=math.inf)
    with pytest.raises(ValidationError, match="strictly positive"):
        ModelParams(mu=0.0).check_assumptions()
    with pytest.raises(ValidationError, match="alpha"):
        ModelParams(alpha2=TransitionFn.constant(0.0)).check_assumptions()
    assert ModelParams().check_assumptions().replace(mu=2.0).mu == 2.0


def test_regularization_validation():
    assert Regularization().theta == 4
    with pytest.raises(ValidationError):
        Regularization(1.0, 4)
    with pytest.raises(ValidationError):
        Regularization(0.1, 2.5)
    Regularization(0.1, 3).check_dimension(2)
    with pytest.raises(ValidationError, match=r"theta > max\{2, n\}"):
        Regularization(0.1, 2).check_dimension(2)

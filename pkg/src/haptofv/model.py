"""Parameters and pointwise nonlinearities of the double-haptotaxis system.

Species: ``c1`` mesenchymal stem cells, ``c2`` chondrocytes, ``h`` hyaluron,
``tau`` newly produced ECM.  Everything here is pointwise (no space), and
works on floats as well as numpy arrays of matching shape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import NamedTuple

import numpy as np


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class ValidationError(ValueError):
    """Input violates a modelling assumption."""


def int_power(x, n: int):
    """``x**n`` for a nonnegative integer ``n`` by repeated squaring."""
    if n < 0:
        raise DomainError(f"exponent must be nonnegative, got {n}")
    result = np.ones_like(x) if isinstance(x, np.ndarray) else 1.0
    base = x
    while n:
        if n & 1:
            result = result * base
        n >>= 1
        if n:
            base = base * base
    return result


def _saturate(eps: float, s):
    # eps == 0 is the unregularized (limit) system: F_0(s) = s
    return s / (1.0 + eps * s)


def f_eps(eps: float, s: float) -> float:
    """Regularizer ``F_eps(s) = s / (1 + eps*s)``.

    Satisfies ``0 <= F_eps(s) <= s`` and ``F_eps(s) < 1/eps``.
    """
    if not (0.0 < eps < 1.0):
        raise DomainError(f"eps must lie in (0, 1), got {eps!r}")
    if not s >= 0.0:
        raise DomainError(f"s must be nonnegative, got {s!r}")
    return s / (1.0 + eps * s)


def saturation(c2):
    """Production term ``c2 / (1 + c2)``, bounded by 1 for ``c2 >= 0``."""
    return c2 / (1.0 + c2)


@dataclass(frozen=True)
class TransitionFn:
    """Bounded (de)differentiation rate as a function of the ECM density.

    ``kind="constant"``: ``alpha(z) = a``.
    ``kind="saturating"``: ``alpha(z) = a + b*z/(1+z)``, capped by ``a + b``.
    """

    kind: str = "constant"
    a: float = 0.1
    b: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "saturating"):
            raise ValidationError(f"unknown transition function kind {self.kind!r}")
        if not (math.isfinite(self.a) and self.a >= 0.0):
            raise ValidationError(f"transition rate A must be finite and >= 0, got {self.a}")
        if not (math.isfinite(self.b) and self.b >= 0.0):
            raise ValidationError(f"transition rate B must be finite and >= 0, got {self.b}")
        if self.kind == "constant" and self.b != 0.0:
            raise ValidationError("constant transition function takes no B")

    @classmethod
    def constant(cls, a: float) -> "TransitionFn":
        return cls("constant", a, 0.0)

    @classmethod
    def saturating(cls, a: float, b: float) -> "TransitionFn":
        return cls("saturating", a, b)

    @property
    def cap(self) -> float:
        """Supremum over ``z >= 0`` (``M_alpha``)."""
        return self.a + self.b

    def __call__(self, z):
        if self.kind == "constant":
            return self.a + 0.0 * z
        return self.a + self.b * z / (1.0 + z)


def alpha_eval(fn: TransitionFn, z: float) -> float:
    if not z >= 0.0:
        raise DomainError(f"transition functions are evaluated at z >= 0, got {z!r}")
    return float(fn(z))


_SCALARS = ("a1", "a2", "b_h", "b_tau", "beta", "gamma1", "gamma2", "delta", "mu", "sigma")


@dataclass(frozen=True)
class ModelParams:
    """Physical constants of the model.

    Construction only rejects negative or non-finite values so that
    decoupled verification problems (zero rates) can be built;
    :meth:`check_assumptions` enforces strict positivity.
    """

    a1: float = 0.05
    a2: float = 0.02
    b_h: float = 0.2
    b_tau: float = 0.2
    beta: float = 1.0
    gamma1: float = 0.5
    gamma2: float = 0.3
    delta: float = 0.4
    mu: float = 0.5
    sigma: float = 0.5
    alpha1: TransitionFn = field(default_factory=lambda: TransitionFn.saturating(0.2, 0.3))
    alpha2: TransitionFn = field(default_factory=lambda: TransitionFn.constant(0.1))

    def __post_init__(self):
        for name in _SCALARS:
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v >= 0.0):
                raise ValidationError(f"model.{name} must be a finite nonnegative number, got {v!r}")

    def check_assumptions(self) -> "ModelParams":
        for name in _SCALARS:
            if not getattr(self, name) > 0.0:
                raise ValidationError(
                    f"model.{name} must be strictly positive (assumption: all parameters positive)"
                )
        for name in ("alpha1", "alpha2"):
            fn = getattr(self, name)
            if not fn.a > 0.0:
                raise ValidationError(
                    f"model.{name} must satisfy alpha(z) > 0 for z >= 0 (transition rates bounded below); got A={fn.a}"
                )
        return self

    def replace(self, **changes) -> "ModelParams":
        kw = {f.name: getattr(self, f.name) for f in fields(self)}
        kw.update(changes)
        return ModelParams(**kw)


@dataclass(frozen=True)
class Regularization:
    """Vanishing-viscosity parameters: artificial cue diffusion and damping
    ``-eps * c1**theta``.  ``eps == 0`` selects the unregularized system."""

    eps: float = 0.05
    theta: int = 4

    def __post_init__(self):
        if not (0.0 <= self.eps < 1.0):
            raise ValidationError(f"reg.eps must lie in [0, 1), got {self.eps!r}")
        if int(self.theta) != self.theta or self.theta < 1:
            raise ValidationError(f"reg.theta must be a positive integer, got {self.theta!r}")

    def check_dimension(self, dim: int) -> "Regularization":
        bound = max(2, dim)
        if not self.theta > bound:
            raise ValidationError(
                f"reg.theta = {self.theta} violates theta > max{{2, n}} = {bound} (regularized system, n = {dim})"
            )
        return self


class ReactionRates(NamedTuple):
    r_c1: object
    r_c2: object
    r_h: object
    r_tau: object


def reaction_rhs(p: ModelParams, reg: Regularization, c1, c2, h, tau) -> ReactionRates:
    """Non-transport right-hand sides of the regularized system."""
    for name, v in (("c1", c1), ("c2", c2), ("h", h), ("tau", tau)):
        if np.any(np.asarray(v) < 0.0):
            raise DomainError(f"{name} must be nonnegative")
    a1 = p.alpha1(tau)
    a2 = p.alpha2(tau)
    exchange = a1 * c1 - a2 * _saturate(reg.eps, c2)
    growth = p.beta * c1 * (1.0 - c1 - c2 - tau) - reg.eps * int_power(c1, reg.theta)
    r = saturation(c2)
    return ReactionRates(
        r_c1=-exchange + growth,
        r_c2=exchange,
        r_h=-p.gamma1 * h * c1 - p.gamma2 * h * c2 - p.mu * h + r,
        r_tau=-p.delta * tau * c1 - p.sigma * tau + r,
    )

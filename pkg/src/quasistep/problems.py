"""Quasi-linear model problems ``u' + A(u)u = f(u)`` on a periodic grid.

Every model operator is assembled in the split form ``0.5*(a D + D a)`` with
``D`` the periodic central difference, so ``A_h(y)`` is exactly skew-symmetric
in the grid inner product for every state ``y``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import kernels
from .spaces import LUFactorization, SpaceConfig


class Problem:
    """Base class: subclasses provide ``apply_A`` and ``assemble_A``.

    ``semilinear`` is an optional callable ``f(y)``; the default is ``f = 0``.
    """

    name = "problem"

    def __init__(self, space: SpaceConfig, semilinear: Optional[Callable] = None):
        self.space = space
        self.semilinear = semilinear

    def apply_A(self, y, w) -> np.ndarray:
        raise NotImplementedError

    def assemble_A(self, y) -> np.ndarray:
        raise NotImplementedError

    def apply_f(self, y, t) -> np.ndarray:
        if self.semilinear is None:
            return np.zeros(self.space.dof)
        return np.asarray(self.semilinear(y), dtype=np.float64)

    exact_solution = None

    @property
    def is_pure(self) -> bool:
        """True when f is identically zero (no semilinear term, no forcing)."""
        return self.semilinear is None

    def params(self) -> dict:
        return {}


class ZeroProblem(Problem):
    """A = 0 and f = constant ``g``."""

    name = "zero"

    def __init__(self, space, constant=0.0):
        semilinear = None if constant == 0 else (lambda y, g=float(constant): np.full(y.shape, g))
        super().__init__(space, semilinear)
        self.constant = float(constant)

    def apply_A(self, y, w):
        return np.zeros(self.space.dof)

    def assemble_A(self, y):
        return np.zeros((self.space.dof, self.space.dof))

    def params(self):
        return {"constant": self.constant}


class TransportProblem(Problem):
    """Scalar transport ``A(y)w = a(y) w_x`` with ``a(y) = a0 + a1*y``."""

    name = "transport"

    def __init__(self, space, a0=1.0, a1=1.0, semilinear=None):
        if space.components != 1:
            raise ValueError("transport problem is scalar")
        super().__init__(space, semilinear)
        self.a0 = float(a0)
        self.a1 = float(a1)
        self._inv2h = 1.0 / (2.0 * space.h)

    def coefficient(self, y):
        return self.a0 + self.a1 * np.asarray(y, dtype=np.float64)

    def apply_A(self, y, w):
        return kernels.split_skew_apply(self.coefficient(y), np.asarray(w, dtype=np.float64), self._inv2h)

    def assemble_A(self, y):
        return kernels.split_skew_matrix(self.coefficient(y), self._inv2h)

    def params(self):
        return {"a0": self.a0, "a1": self.a1}


class SymmetricSystemProblem(Problem):
    """Two-component wave system ``A(y)(u, v) = (c(y) v_x, c(y) u_x)``.

    ``c(y) = 1 + (y_u**2 + y_v**2)/4`` pointwise; each off-diagonal block uses
    the split skew form, so the block operator is skew as well.
    """

    name = "system"

    def __init__(self, space, semilinear=None):
        if space.components != 2:
            space = space.with_(components=2)
        super().__init__(space, semilinear)
        self._inv2h = 1.0 / (2.0 * space.h)

    def coefficient(self, y):
        yu, yv = self.space.split(y)
        return 1.0 + 0.25 * (yu * yu + yv * yv)

    def apply_A(self, y, w):
        c = self.coefficient(y)
        wu, wv = self.space.split(w)
        out = np.empty(self.space.dof)
        out[0::2] = kernels.split_skew_apply(c, np.ascontiguousarray(wv), self._inv2h)
        out[1::2] = kernels.split_skew_apply(c, np.ascontiguousarray(wu), self._inv2h)
        return out

    def assemble_A(self, y):
        k = kernels.split_skew_matrix(self.coefficient(y), self._inv2h)
        n = self.space.dof
        m = np.zeros((n, n))
        m[0::2, 1::2] = k
        m[1::2, 0::2] = k
        return m


class KdVProblem(Problem):
    """KdV-type operator ``A(y)w = 0.5*(y D + D y) w + dispersion * D3 w``."""

    name = "kdv"

    def __init__(self, space, dispersion=0.01, semilinear=None):
        if space.components != 1:
            raise ValueError("kdv problem is scalar")
        super().__init__(space, semilinear)
        self.dispersion = float(dispersion)
        self._inv2h = 1.0 / (2.0 * space.h)
        self._inv2h3 = 1.0 / (2.0 * space.h**3)
        self._d3 = kernels.third_difference_matrix(space.n_points, self._inv2h3)

    def apply_A(self, y, w):
        w = np.asarray(w, dtype=np.float64)
        out = kernels.split_skew_apply(np.asarray(y, dtype=np.float64), w, self._inv2h)
        if self.dispersion != 0.0:
            out = out + self.dispersion * kernels.third_difference_apply(w, self._inv2h3)
        return out

    def assemble_A(self, y):
        m = kernels.split_skew_matrix(np.asarray(y, dtype=np.float64), self._inv2h)
        if self.dispersion != 0.0:
            m = m + self.dispersion * self._d3
        return m

    def params(self):
        return {"dispersion": self.dispersion}


# -- manufactured solutions ---------------------------------------------------


@dataclass(frozen=True)
class Target:
    """Closed-form target ``u*(x, t)`` with its time derivative.

    Both callables return an array of shape ``(N,)`` for scalar problems or
    ``(components, N)`` for systems.
    """

    value: Callable
    time_derivative: Callable
    label: str = "custom"


def sine_target(components=1, amplitude=0.5, decay=0.25) -> Target:
    """``amplitude * sin(x - t) * exp(-decay t)``; a second component uses cos."""

    def value(x, t):
        e = amplitude * np.exp(-decay * t)
        if components == 1:
            return e * np.sin(x - t)
        return np.stack([e * np.sin(x - t), e * np.cos(x - t)])

    def dvalue(x, t):
        e = amplitude * np.exp(-decay * t)
        s, c = np.sin(x - t), np.cos(x - t)
        if components == 1:
            return e * (-c - decay * s)
        return np.stack([e * (-c - decay * s), e * (s - decay * c)])

    return Target(value, dvalue, "sine")


def polynomial_target(coeffs, profile=np.sin) -> Target:
    """``(c0 + c1 t + c2 t^2 + ...) * profile(x)`` for scalar problems."""
    poly = np.polynomial.Polynomial(coeffs)
    dpoly = poly.deriv()
    return Target(lambda x, t: poly(t) * profile(x),
                  lambda x, t: dpoly(t) * profile(x),
                  "polynomial")


class ManufacturedProblem(Problem):
    """Wraps a problem so that a chosen target solves the semidiscrete equation.

    The forcing ``d*(t) = du*/dt + A_h(u*)u* - f(u*)`` is computed with the
    discrete operator itself, so the grid sampling of ``u*`` is an exact
    solution of the semidiscrete system.
    """

    def __init__(self, base: Problem, target: Target):
        super().__init__(base.space, base.semilinear)
        self.base = base
        self.target = target
        self.name = base.name

    def apply_A(self, y, w):
        return self.base.apply_A(y, w)

    def assemble_A(self, y):
        return self.base.assemble_A(y)

    def exact_solution(self, t) -> np.ndarray:
        return self.space.sample(self.target.value, t)

    def exact_derivative(self, t) -> np.ndarray:
        return self.space.sample(self.target.time_derivative, t)

    def forcing(self, t) -> np.ndarray:
        u = self.exact_solution(t)
        return self.exact_derivative(t) + self.base.apply_A(u, u) - self.base.apply_f(u, t)

    def apply_f(self, y, t):
        return self.base.apply_f(y, t) + self.forcing(t)

    @property
    def is_pure(self):
        return False

    def params(self):
        return dict(self.base.params(), target=self.target.label)


# -- factories and operations ---------------------------------------------------


def transport_problem(space, a0=1.0, a1=1.0, semilinear=None) -> TransportProblem:
    return TransportProblem(space, a0, a1, semilinear)


def symmetric_system_problem(space, semilinear=None) -> SymmetricSystemProblem:
    return SymmetricSystemProblem(space, semilinear)


def kdv_problem(space, dispersion=0.01, semilinear=None) -> KdVProblem:
    return KdVProblem(space, dispersion, semilinear)


def zero_problem(space, constant=0.0) -> ZeroProblem:
    return ZeroProblem(space, constant)


def manufactured(problem: Problem, target: Optional[Target] = None) -> ManufacturedProblem:
    if target is None:
        target = sine_target(problem.space.components)
    return ManufacturedProblem(problem, target)


def shifted_solve(problem: Problem, y, gamma, r) -> np.ndarray:
    """Solve ``(I + gamma * A_h(y)) w = r``."""
    if gamma < 0:
        raise ValueError("gamma must be non-negative")
    r = problem.space.check(r, "r")
    if gamma == 0:
        return r.copy()
    m = gamma * problem.assemble_A(y)
    m[np.diag_indices_from(m)] += 1.0
    return LUFactorization(m).solve(r)


def commutator_apply(problem: Problem, y, w) -> np.ndarray:
    """``B(y)w = S A(y) S^{-1} w - A(y) w``."""
    sp = problem.space
    return sp.apply_S(problem.apply_A(y, sp.apply_S_inv(w))) - problem.apply_A(y, w)

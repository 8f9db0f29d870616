"""Time stepping: linearly/fully implicit midpoint rules and implicit Runge-Kutta.

Nonlinear stage equations are solved by the contraction iteration that freezes
the operator at the previous iterate and solves the resulting linear problem;
no Newton method is used. When the iteration stops contracting the step fails
with :class:`StepsizeTooLargeError`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math
import weakref
from typing import Callable, Optional, Union

import numpy as np

from . import kernels
from .problems import Problem
from .spaces import LUFactorization, SingularMatrixError
from .tableau import Tableau, coefficient_inverse

MIDPOINT = "midpoint"
UPDATE = "update"
METHODS = ("midpoint_li", "midpoint_fi")


class StepError(RuntimeError):
    """A step could not be completed; ``step_index`` is filled in by :func:`integrate`."""

    step_index: Optional[int] = None


class StepsizeTooLargeError(StepError):
    def __init__(self, ratio, iterations, reason="fixed-point divergence"):
        self.ratio = float(ratio)
        self.iterations = int(iterations)
        self.reason = reason
        super().__init__(self._text())

    def _text(self):
        where = f" at step {self.step_index}" if self.step_index is not None else ""
        return f"{self.reason}{where}, ratio {self.ratio:.2f} after {self.iterations} iterations: reduce tau"

    def __str__(self):
        return self._text()


@dataclass(frozen=True)
class StepperConfig:
    tau: float
    method: Union[str, Tableau] = "midpoint_fi"
    fp_tol: float = 1e-12
    fp_max_iters: int = 100

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError(f"tau must be positive, got {self.tau}")
        if not self.fp_tol > 0:
            raise ValueError("fp_tol must be positive")
        if self.fp_max_iters < 1:
            raise ValueError("fp_max_iters must be >= 1")
        if not isinstance(self.method, Tableau) and self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}")

    @property
    def method_label(self) -> str:
        return self.method.label if isinstance(self.method, Tableau) else self.method


@dataclass
class StepState:
    u_current: np.ndarray
    t: float = 0.0
    step_index: int = 0
    u_previous: Optional[np.ndarray] = None


@dataclass(frozen=True)
class StepReport:
    step_index: int
    fp_iterations: int
    fp_final_residual: float
    norm_x: float
    norm_y: float
    injected_defect_norm: float = 0.0
    increments: tuple = field(default=(), repr=False)


class DefectInjector:
    """Adds ``eps * shape(step_index, site, t)`` to a scheme's equations.

    ``site`` is ``"midpoint"`` for the midpoint equation, a stage index ``i``
    for stage equation ``i``, or ``"update"`` for the Runge-Kutta update.
    ``sites`` restricts injection (default: every site the scheme visits).
    """

    def __init__(self, shape: Callable, eps: float = 1.0, sites=None):
        self.shape = shape
        self.eps = float(eps)
        self.sites = None if sites is None else frozenset(sites)

    def wants(self, site) -> bool:
        if self.sites is None:
            return True
        if isinstance(site, (int, np.integer)):
            return "stages" in self.sites or site in self.sites
        return site in self.sites

    def __call__(self, step_index, site, t, dof):
        if not self.wants(site):
            return np.zeros(dof)
        return self.eps * np.asarray(self.shape(step_index, site, t), dtype=np.float64)


def _scale(space, u):
    s = space.norm_x(u)
    return s if s > 0 else 1.0


class _Contraction:
    """Tracks successive increments of a fixed-point iteration."""

    def __init__(self, cfg: StepperConfig, scale):
        self.cfg = cfg
        self.target = cfg.fp_tol * scale
        self.increments = []
        self._rising = 0

    def update(self, inc) -> bool:
        if not math.isfinite(inc):
            raise StepsizeTooLargeError(math.inf, len(self.increments) + 1, "fixed-point iteration produced non-finite values")
        incs = self.increments
        ratio = inc / incs[-1] if incs and incs[-1] > 0 else 0.0
        incs.append(inc)
        if inc <= self.target:
            return True
        self._rising = self._rising + 1 if ratio >= 1.0 else 0
        if self._rising >= 3:
            raise StepsizeTooLargeError(ratio, len(incs))
        if len(incs) >= self.cfg.fp_max_iters:
            raise StepsizeTooLargeError(ratio, len(incs), "fixed-point iteration hit fp_max_iters")
        return False

    @property
    def residual(self):
        return self.increments[-1] if self.increments else 0.0


def _shifted(problem, y, gamma):
    m = gamma * problem.assemble_A(y)
    m[np.diag_indices_from(m)] += 1.0
    return m, LUFactorization(m)


def _solve(matrix_fn, *args):
    try:
        return matrix_fn(*args)
    except SingularMatrixError as exc:
        raise StepsizeTooLargeError(math.inf, 0, f"singular stage system (pivot {exc.pivot:.2e})") from None


def _report(problem, n, u_new, iters, residual, defect_sq, increments=()):
    sp = problem.space
    return StepReport(n, iters, residual, sp.norm_x(u_new), sp.norm_y(u_new),
                      math.sqrt(defect_sq), tuple(increments))


def step_midpoint_li(problem: Problem, state: StepState, cfg: StepperConfig,
                     injector: Optional[DefectInjector] = None):
    """Linearly implicit midpoint step: one linear solve with A frozen at the extrapolation."""
    sp = problem.space
    tau, n = cfg.tau, state.step_index
    u = state.u_current
    if n == 0:
        u_hat = u
    elif state.u_previous is None:
        raise ValueError("linearly implicit midpoint needs u_previous for n >= 1")
    else:
        u_hat = u + 0.5 * (u - state.u_previous)
    t_half = state.t + 0.5 * tau
    a = problem.assemble_A(u_hat)
    rhs = u - (0.5 * tau) * (a @ u) + tau * problem.apply_f(u_hat, t_half)
    defect_sq = 0.0
    if injector is not None:
        d = injector(n, MIDPOINT, t_half, sp.dof)
        rhs = rhs + tau * d
        defect_sq = sp.norm_x(d) ** 2
    a *= 0.5 * tau
    a[np.diag_indices_from(a)] += 1.0
    u_new = _solve(lambda: LUFactorization(a).solve(rhs))
    return u_new, _report(problem, n, u_new, 0, 0.0, defect_sq)


def step_midpoint_fi(problem: Problem, state: StepState, cfg: StepperConfig,
                     injector: Optional[DefectInjector] = None):
    """Fully implicit midpoint step via the frozen-operator contraction iteration."""
    sp = problem.space
    tau, n = cfg.tau, state.step_index
    u = state.u_current
    t_half = state.t + 0.5 * tau
    d = None
    defect_sq = 0.0
    if injector is not None:
        d = injector(n, MIDPOINT, t_half, sp.dof)
        defect_sq = sp.norm_x(d) ** 2
    track = _Contraction(cfg, _scale(sp, u))
    v = u
    while True:
        g = problem.apply_f(v, t_half)
        if d is not None:
            g = g + d
        rhs = u + (0.5 * tau) * g
        _, lu = _solve(_shifted, problem, v, 0.5 * tau)
        v_new = lu.solve(rhs)
        done = track.update(sp.norm_x(v_new - v))
        v = v_new
        if done:
            break
    u_new = 2.0 * v - u
    return u_new, _report(problem, n, u_new, len(track.increments), track.residual, defect_sq, track.increments)


class _IRKData:
    def __init__(self, tab: Tableau):
        self.tab = tab
        self.ainv = coefficient_inverse(tab)
        self.ainv_one = self.ainv.sum(axis=1)
        self.weights = tab.b @ self.ainv


_IRK_CACHE: "weakref.WeakKeyDictionary[Tableau, _IRKData]" = weakref.WeakKeyDictionary()


def _irk_data(tab):
    data = _IRK_CACHE.get(tab)
    if data is None:
        data = _IRK_CACHE[tab] = _IRKData(tab)
    return data


def step_irk(problem: Problem, state: StepState, tab: Tableau, cfg: StepperConfig,
             injector: Optional[DefectInjector] = None):
    """Implicit Runge-Kutta step; stages from the frozen-operator block iteration.

    Each iteration solves ``(a^{-1} (x) I + tau diag(A(V_i))) U = (a^{-1} 1) (x) u_n
    + (a^{-1} (x) I) D + tau F(V)``. Stage derivatives are recovered from the
    stage relation ``a^{-1}(U - u_n - D) / tau``.
    """
    sp = problem.space
    data = _irk_data(tab)
    tau, n, m = cfg.tau, state.step_index, tab.m
    u = state.u_current
    t_stage = state.t + tab.c * tau
    dof = sp.dof

    defect_sq = 0.0
    stage_def = None
    d_update = None
    if injector is not None:
        stage_def = np.stack([injector(n, i, t_stage[i], dof) for i in range(m)])
        d_update = injector(n, UPDATE, state.t + tau, dof)
        defect_sq = sum(sp.norm_x(x) ** 2 for x in stage_def) + sp.norm_x(d_update) ** 2

    base = np.outer(data.ainv_one, u)
    if stage_def is not None:
        base = base + data.ainv @ stage_def

    track = _Contraction(cfg, _scale(sp, u))
    V = np.tile(u, (m, 1))
    while True:
        blocks = np.stack([problem.assemble_A(V[i]) for i in range(m)])
        F = np.stack([problem.apply_f(V[i], t_stage[i]) for i in range(m)])
        rhs = base + tau * F
        big = kernels.stage_system(data.ainv, tau, blocks)
        lu = _solve(LUFactorization, big)
        U = lu.solve(np.ascontiguousarray(rhs.T).reshape(-1)).reshape(dof, m).T
        inc = math.sqrt(sum(sp.norm_x(U[i] - V[i]) ** 2 for i in range(m)))
        done = track.update(inc)
        V = U
        if done:
            break

    rel = V - u if stage_def is None else V - u - stage_def
    u_new = u + data.weights @ rel
    if d_update is not None:
        u_new = u_new + d_update
    return u_new, _report(problem, n, u_new, len(track.increments), track.residual, defect_sq, track.increments)


def step(problem, state, cfg, injector=None):
    if isinstance(cfg.method, Tableau):
        return step_irk(problem, state, cfg.method, cfg, injector)
    if cfg.method == "midpoint_li":
        return step_midpoint_li(problem, state, cfg, injector)
    return step_midpoint_fi(problem, state, cfg, injector)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    stride: int = 1

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    @property
    def final_time(self) -> float:
        return float(self.times[-1])


def step_count(T, tau) -> int:
    k = int(round(T / tau))
    if k < 1:
        raise ValueError(f"T = {T} is shorter than one step of tau = {tau}")
    if abs(k * tau - T) > 1e-12 * max(1.0, abs(T)):
        raise ValueError(f"tau = {tau} does not divide T = {T}; only constant stepsizes are supported")
    return k


def integrate(problem: Problem, u0, cfg: StepperConfig, T: float,
              injector: Optional[DefectInjector] = None,
              monitor: Optional[Callable] = None, stride: int = 1):
    """Advance ``u0`` over ``[0, T]`` with constant stepsize ``cfg.tau``.

    Returns ``(trajectory, reports)``. The trajectory keeps every ``stride``-th
    state plus the final one. ``monitor(n, t, u, report)`` is called after each
    step.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    if stride < 1:
        raise ValueError("stride must be >= 1")
    k_steps = step_count(T, cfg.tau)
    u = problem.space.check(u0, "u0").copy()
    state = StepState(u, 0.0, 0, None)
    times, states, reports = [0.0], [u], []
    for n in range(k_steps):
        try:
            u_new, rep = step(problem, state, cfg, injector)
        except StepError as exc:
            exc.step_index = n + 1
            raise
        reports.append(rep)
        t_new = (n + 1) * cfg.tau
        if monitor is not None:
            monitor(n + 1, t_new, u_new, rep)
        if (n + 1) % stride == 0 or n + 1 == k_steps:
            times.append(t_new)
            states.append(u_new)
        state = StepState(u_new, t_new, n + 1, state.u_current)
    return Trajectory(np.array(times), np.array(states), stride), reports

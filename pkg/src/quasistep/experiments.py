"""Convergence, perturbation, contraction and consistency studies."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import math
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

from .integrators import (DefectInjector, StepError, StepperConfig, StepState, integrate,
                          step, step_count)
from .problems import Problem
from .tableau import Tableau, coefficient_inverse

FLOOR_REL = 1e-13


class StudyError(RuntimeError):
    """A study could not be completed."""


class FitError(ValueError):
    pass


class OrderFit(NamedTuple):
    slope: float
    pair_slopes: tuple


def fit_order(points, floor=0.0) -> OrderFit:
    """Least-squares slope of ``log(err)`` against ``log(param)``.

    ``points`` is a sequence of ``(param, err)``. Points with ``err <= floor``
    are dropped; pair slopes are taken between consecutive retained points.
    """
    kept = [(float(p), float(e)) for p, e in points if e > floor and math.isfinite(e)]
    if len(kept) < 2:
        raise FitError(f"need at least 2 points above the floor {floor:.1e}, have {len(kept)}")
    x = np.log([p for p, _ in kept])
    y = np.log([e for _, e in kept])
    slope = float(np.polyfit(x, y, 1)[0])
    pairs = tuple(float((y[j] - y[j + 1]) / (x[j] - x[j + 1])) for j in range(len(kept) - 1))
    return OrderFit(slope, pairs)


@dataclass
class StudyReport:
    kind: str
    param_name: str
    params: list
    error_x: list
    error_y: list
    fitted_order: float = float("nan")
    pair_orders: tuple = ()
    used: list = field(default_factory=list)
    expected_order: Optional[float] = None
    tolerance: Optional[float] = None
    one_sided: bool = False
    passed: bool = False
    meta: dict = field(default_factory=dict)

    def judge(self):
        if self.expected_order is None or not math.isfinite(self.fitted_order):
            return self.passed
        lo = self.expected_order - self.tolerance
        hi = math.inf if self.one_sided else self.expected_order + self.tolerance
        self.passed = bool(lo <= self.fitted_order <= hi)
        return self.passed

    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def summary(self) -> dict:
        out = {
            "kind": self.kind,
            "param": self.param_name,
            "fitted_order": self.fitted_order,
            "pair_orders": list(self.pair_orders),
            "expected_order": self.expected_order,
            "tolerance": self.tolerance,
            "one_sided": self.one_sided,
            "pass": self.passed,
        }
        out.update(self.meta)
        return out


def _map(fn, items, jobs):
    if jobs and jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def _method_label(method):
    return method.label if isinstance(method, Tableau) else str(method)


# -- convergence -----------------------------------------------------------------


@dataclass
class ConvergenceSpec:
    problem: Problem
    method: Union[str, Tableau]
    taus: Sequence[float] = tuple(1.0 / (40 * 2**j) for j in range(5))
    T: float = 1.0
    norm: str = "Y"
    reference: str = "exact"
    tau_ref: Optional[float] = None
    expected_order: Optional[float] = None
    tolerance: float = 0.15
    one_sided: bool = False
    fp_tol: float = 1e-12
    fp_max_iters: int = 100
    floor: Optional[float] = None

    def validate(self):
        taus = list(self.taus)
        if len(taus) < 2 or any(b >= a for a, b in zip(taus, taus[1:])):
            raise ValueError("taus must hold at least two strictly decreasing stepsizes")
        for tau in taus:
            step_count(self.T, tau)
        if self.norm not in ("X", "Y"):
            raise ValueError("norm must be 'X' or 'Y'")
        if self.reference == "exact":
            if self.problem.exact_solution is None:
                raise ValueError("reference 'exact' needs a problem with an exact solution")
        elif self.reference == "fine":
            if self.tau_ref is None or not self.tau_ref < min(taus) / 4:
                raise ValueError("reference 'fine' needs tau_ref < min(taus)/4")
            step_count(self.T, self.tau_ref)
        else:
            raise ValueError(f"unknown reference {self.reference!r}")


def default_floor(space, reference, norm):
    """Roundoff floor for terminal errors: 1e-13 times the reference size.

    In the Y-norm the floor is further scaled by the largest multiplier of S,
    which amplifies grid-scale roundoff.
    """
    size = space.norm_y(reference) if norm == "Y" else space.norm_x(reference)
    if norm == "Y":
        size *= float(space._s_multiplier.max())
    return FLOOR_REL * (size if size > 0 else 1.0)


def run_convergence(spec: ConvergenceSpec, jobs: int = 1) -> StudyReport:
    spec.validate()
    p = spec.problem
    sp = p.space
    u0 = p.exact_solution(0.0) if p.exact_solution is not None else None
    if u0 is None:
        raise ValueError("convergence studies start from the exact initial value")

    def run(tau):
        cfg = StepperConfig(tau, spec.method, spec.fp_tol, spec.fp_max_iters)
        try:
            traj, reports = integrate(p, u0, cfg, spec.T, stride=step_count(spec.T, tau))
        except StepError as exc:
            raise StudyError(f"tau = {tau:g}: {exc}") from exc
        return traj.final, max(r.fp_iterations for r in reports)

    if spec.reference == "exact":
        ref = p.exact_solution(spec.T)
    else:
        ref = run(spec.tau_ref)[0]
    results = _map(run, list(spec.taus), jobs)
    ex = [sp.norm_x(u - ref) for u, _ in results]
    ey = [sp.norm_y(u - ref) for u, _ in results]
    errs = ey if spec.norm == "Y" else ex
    floor = spec.floor if spec.floor is not None else default_floor(sp, ref, spec.norm)
    report = StudyReport("convergence", "tau", list(spec.taus), ex, ey,
                         expected_order=spec.expected_order, tolerance=spec.tolerance,
                         one_sided=spec.one_sided)
    report.used = [e > floor for e in errs]
    report.meta.update(method=_method_label(spec.method), problem=p.name, norm=spec.norm,
                       reference=spec.reference, floor=floor, T=spec.T,
                       max_fp_iterations=[it for _, it in results])
    try:
        fit = fit_order(zip(spec.taus, errs), floor)
        report.fitted_order, report.pair_orders = fit.slope, fit.pair_slopes
    except FitError as exc:
        report.meta["fit_error"] = str(exc)
        report.passed = False
        return report
    report.judge()
    return report


# -- perturbation -----------------------------------------------------------------

SITES = ("midpoint", "stages", "update", "stages+update", "initial")


def smooth_profile(space) -> np.ndarray:
    k = 2.0 * math.pi / space.domain_length
    return space.sample(lambda x: np.cos(2 * k * x) + 0.5 * np.sin(3 * k * x))


def _site_code(site):
    if isinstance(site, (int, np.integer)):
        return int(site) + 2
    return {"midpoint": 0, "update": 1}[site]


@dataclass
class PerturbationSpec:
    problem: Problem
    method: Union[str, Tableau]
    tau: float = 1.0 / 80
    T: float = 1.0
    epsilons: Sequence[float] = (1e-2, 1e-3, 1e-4, 1e-5)
    site: str = "midpoint"
    defect: str = "smooth"
    seed: Optional[int] = None
    expected_order: float = 1.0
    tolerance: float = 0.1
    fp_tol: float = 1e-12
    fp_max_iters: int = 100

    def validate(self):
        eps = list(self.epsilons)
        if any(e < 0 for e in eps):
            raise ValueError("epsilons must be non-negative")
        pos = [e for e in eps if e > 0]
        if any(b >= a for a, b in zip(pos, pos[1:])):
            raise ValueError("epsilons must be decreasing")
        if self.site not in SITES:
            raise ValueError(f"site must be one of {SITES}")
        if self.defect not in ("smooth", "random"):
            raise ValueError("defect must be 'smooth' or 'random'")
        if self.defect == "random" and self.seed is None:
            raise ValueError("a seed is required for random defects")
        is_irk = isinstance(self.method, Tableau)
        if self.site == "midpoint" and is_irk:
            raise ValueError("site 'midpoint' applies to midpoint methods")
        if self.site in ("stages", "update", "stages+update") and not is_irk:
            raise ValueError(f"site {self.site!r} applies to Runge-Kutta methods")
        step_count(self.T, self.tau)

    def injector(self, eps) -> Optional[DefectInjector]:
        if self.site == "initial":
            return None
        sp = self.problem.space
        # state-form sites (stage equations, update) carry a factor tau so that
        # every site injects a defect of size eps per unit time
        factor = 1.0 if self.site == "midpoint" else self.tau
        if self.defect == "smooth":
            prof = factor * smooth_profile(sp)
            shape = lambda n, site, t: prof  # noqa: E731
        else:
            seed = int(self.seed)

            def shape(n, site, t):
                rng = np.random.default_rng(np.random.SeedSequence([seed, n, _site_code(site)]))
                return factor * sp.band_limited(rng)
        sites = {"stages+update": {"stages", "update"}}.get(self.site, {self.site})
        return DefectInjector(shape, eps, sites)


def run_perturbation(spec: PerturbationSpec, jobs: int = 1) -> StudyReport:
    """Terminal Y-error between perturbed and unperturbed runs against the defect size."""
    spec.validate()
    p = spec.problem
    sp = p.space
    cfg = StepperConfig(spec.tau, spec.method, spec.fp_tol, spec.fp_max_iters)
    u0 = p.exact_solution(0.0) if p.exact_solution is not None else None
    if u0 is None:
        raise ValueError("perturbation studies need a problem with an exact initial value")

    def run(eps):
        start = u0 + eps * smooth_profile(sp) if spec.site == "initial" else u0
        try:
            traj, _ = integrate(p, start, cfg, spec.T, injector=spec.injector(eps))
        except StepError as exc:
            raise StudyError(f"eps = {eps:g}: {exc}") from exc
        return traj

    base = _run_clean(p, u0, cfg, spec.T)
    trajs = _map(run, list(spec.epsilons), jobs)
    ex, ey, ey_max = [], [], []
    for tr in trajs:
        diff = tr.states - base.states
        ex.append(sp.norm_x(diff[-1]))
        ey.append(sp.norm_y(diff[-1]))
        ey_max.append(max(sp.norm_y(d) for d in diff))
    report = StudyReport("perturbation", "eps", list(spec.epsilons), ex, ey,
                         expected_order=spec.expected_order, tolerance=spec.tolerance)
    report.meta.update(method=_method_label(spec.method), problem=p.name, site=spec.site,
                       defect=spec.defect, tau=spec.tau, T=spec.T, max_error_y=ey_max)
    pts = [(e, err) for e, err in zip(spec.epsilons, ey) if e > 0]
    report.used = [e > 0 and err > 0 for e, err in zip(spec.epsilons, ey)]
    try:
        fit = fit_order(pts)
        fit_x = fit_order([(e, err) for e, err in zip(spec.epsilons, ex) if e > 0])
    except FitError as exc:
        report.meta["fit_error"] = str(exc)
        return report
    report.fitted_order, report.pair_orders = fit.slope, fit.pair_slopes
    report.meta["fitted_order_x"] = fit_x.slope
    report.judge()
    return report


def _run_clean(p, u0, cfg, T):
    try:
        traj, _ = integrate(p, u0, cfg, T)
    except StepError as exc:
        raise StudyError(f"unperturbed run failed: {exc}") from exc
    return traj


# -- contraction ------------------------------------------------------------------


def run_contraction(problem: Problem, method, tau, T, u0=None, *, growth_tol=1e-11,
                    conservation_tol=1e-10, fp_tol=1e-12, fp_max_iters=100) -> StudyReport:
    """Per-step X and Y norms of a pure quasi-linear flow (f = 0).

    Passes when every step satisfies ``|u_{n+1}| <= |u_n| (1 + growth_tol)``.
    For norm-conserving methods (midpoint rules and Gauss) the relative drift
    of ``|u_n|`` must also stay within ``conservation_tol``.
    """
    if not problem.is_pure:
        raise ValueError("contraction studies need f = 0 and no forcing")
    sp = problem.space
    if u0 is None:
        u0 = smooth_profile(sp) * 0.5
    norms_x, norms_y = [sp.norm_x(u0)], [sp.norm_y(u0)]

    def monitor(n, t, u, rep):
        norms_x.append(rep.norm_x)
        norms_y.append(rep.norm_y)

    cfg = StepperConfig(tau, method, fp_tol, fp_max_iters)
    try:
        integrate(problem, u0, cfg, T, monitor=monitor, stride=step_count(T, tau))
    except StepError as exc:
        raise StudyError(str(exc)) from exc
    nx, ny = np.array(norms_x), np.array(norms_y)
    times = tau * np.arange(nx.size)
    growth_x = nx[1:] / nx[:-1]
    growth_y = ny[1:] / ny[:-1]
    drift = float(np.max(np.abs(nx / nx[0] - 1.0)))
    conservative = not isinstance(method, Tableau) or method.family_label == "gauss"
    passed = bool(np.all(growth_x <= 1.0 + growth_tol))
    if conservative:
        passed = passed and drift <= conservation_tol
    report = StudyReport("contraction", "t", list(times), list(nx), list(ny), passed=passed)
    report.fitted_order = float(np.polyfit(times, np.log(ny), 1)[0])
    report.meta.update(
        method=_method_label(method), problem=problem.name, tau=tau, T=T,
        max_growth_x=float(growth_x.max()), x_drift=drift, conservative=conservative,
        y_growth_C_max=float(np.max((growth_y - 1.0) / tau)),
        y_growth_C_fit=report.fitted_order,
    )
    return report


# -- consistency ------------------------------------------------------------------


def midpoint_defects(problem: Problem, method: str, tau, T):
    """Defects obtained by inserting the exact solution into the midpoint scheme.

    Returns an array of ``d_{n+1/2}`` for ``n = 0..K-1``.
    """
    k = step_count(T, tau)
    exact = [problem.exact_solution(n * tau) for n in range(k + 1)]
    out = []
    for n in range(k):
        un, un1 = exact[n], exact[n + 1]
        if method == "midpoint_fi":
            u_hat = 0.5 * (un + un1)
        elif n == 0:
            u_hat = un
        else:
            u_hat = un + 0.5 * (un - exact[n - 1])
        t_half = (n + 0.5) * tau
        d = (un1 - un) / tau + problem.apply_A(u_hat, 0.5 * (un1 + un)) - problem.apply_f(u_hat, t_half)
        out.append(d)
    return np.array(out)


def rk_defects(problem: Problem, tab: Tableau, tau, T):
    """Stage defects ``D_ni`` and update defects ``d_{n+1}`` of the exact solution."""
    k = step_count(T, tau)
    stage_d, upd_d = [], []
    for n in range(k):
        t = n * tau
        un, un1 = problem.exact_solution(t), problem.exact_solution(t + tau)
        U = np.stack([problem.exact_solution(t + ci * tau) for ci in tab.c])
        Udot = np.stack([-problem.apply_A(U[i], U[i]) + problem.apply_f(U[i], t + tab.c[i] * tau)
                         for i in range(tab.m)])
        stage_d.append(U - un - tau * (tab.a @ Udot))
        upd_d.append(un1 - un - tau * (tab.b @ Udot))
    return np.array(stage_d), np.array(upd_d)


def run_consistency(problem: Problem, method, taus, T=1.0, *, expected_order=None,
                    tolerance=0.15, first_expected=1.0, first_tolerance=0.2) -> StudyReport:
    """Fit the order of the scheme's defects at the exact solution (Y-norm)."""
    if problem.exact_solution is None:
        raise ValueError("consistency studies need an exact solution")
    sp = problem.space
    taus = list(taus)
    ex, ey, first_x, first_y = [], [], [], []
    for tau in taus:
        if isinstance(method, Tableau):
            stage_d, upd_d = rk_defects(problem, method, tau, T)
            ex.append(max(sp.norm_x(d) for d in stage_d.reshape(-1, sp.dof)))
            ey.append(max(sp.norm_y(d) for d in stage_d.reshape(-1, sp.dof)))
            first_x.append(max(sp.norm_x(d) for d in upd_d))
            first_y.append(max(sp.norm_y(d) for d in upd_d))
        else:
            d = midpoint_defects(problem, method, tau, T)
            interior = d[1:] if method == "midpoint_li" else d
            ex.append(max(sp.norm_x(v) for v in interior))
            ey.append(max(sp.norm_y(v) for v in interior))
            first_x.append(sp.norm_x(d[0]))
            first_y.append(sp.norm_y(d[0]))
    if expected_order is None:
        expected_order = method_defect_order(method)
    report = StudyReport("consistency", "tau", taus, ex, ey,
                         expected_order=expected_order, tolerance=tolerance)
    ref = problem.exact_solution(0.0)
    floor = default_floor(sp, ref, "Y")
    report.used = [e > floor for e in ey]
    report.meta.update(method=_method_label(method), problem=problem.name, T=T, floor=floor)
    try:
        fit = fit_order(zip(taus, ey), floor)
    except FitError as exc:
        report.meta["fit_error"] = str(exc)
        return report
    report.fitted_order, report.pair_orders = fit.slope, fit.pair_slopes
    report.judge()
    if method == "midpoint_li":
        fit1 = fit_order(zip(taus, first_y), floor)
        ok = abs(fit1.slope - first_expected) <= first_tolerance
        report.meta.update(first_step_defect_y=first_y, first_step_order=fit1.slope,
                           first_step_expected=first_expected, first_step_pass=bool(ok))
        report.passed = report.passed and bool(ok)
    elif isinstance(method, Tableau):
        report.meta.update(update_defect_y=first_y)
        try:
            report.meta["update_defect_order"] = fit_order(zip(taus, first_y), floor).slope
        except FitError:
            report.meta["update_defect_order"] = None
    return report


def method_defect_order(method) -> float:
    if isinstance(method, Tableau):
        from .tableau import stage_order
        return float(stage_order(method) + 1)
    return 2.0


# -- fixed-point stepsize restriction -----------------------------------------------


def stepsize_threshold(problem: Problem, u0, method, taus, *, max_ok_iters=8,
                       fp_tol=1e-12, fp_max_iters=100) -> dict:
    """Locate the stepsize restriction of the contraction iteration on one step.

    For each trial stepsize the first step from ``u0`` is attempted. With
    ``tau_div`` the smallest trial from which every larger trial diverges,
    ``tau_star = tau_div / 4``. The restriction is demonstrated when every
    trial ``<= tau_star/2`` converges in at most ``max_ok_iters`` iterations.
    """
    taus = sorted(float(t) for t in taus)
    outcomes = []
    for tau in taus:
        cfg = StepperConfig(tau, method, fp_tol, fp_max_iters)
        try:
            _, rep = step(problem, StepState(np.asarray(u0, dtype=float)), cfg)
            outcomes.append(rep.fp_iterations)
        except StepError:
            outcomes.append(None)
    tau_div = None
    for tau, it in zip(reversed(taus), reversed(outcomes)):
        if it is not None:
            break
        tau_div = tau
    result = {"taus": taus, "iterations": outcomes, "tau_div": tau_div,
              "tau_star": None, "demonstrated": False}
    if tau_div is None:
        return result
    tau_star = tau_div / 4.0
    small = [it for tau, it in zip(taus, outcomes) if tau <= tau_star / 2 * (1 + 1e-12)]
    large = [it for tau, it in zip(taus, outcomes) if tau >= 4 * tau_star * (1 - 1e-12)]
    ok = bool(small) and all(it is not None and it <= max_ok_iters for it in small)
    ok = ok and bool(large) and all(it is None for it in large)
    result.update(tau_star=tau_star, demonstrated=ok)
    return result

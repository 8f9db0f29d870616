"""Acceptance criteria 1-9. Each test records one PASS/FAIL line, listed in the
"acceptance criteria" section of the pytest terminal summary."""
import math

import numpy as np
import pytest
from conftest import record

from quasistep.cli import main
from quasistep.experiments import (ConvergenceSpec, PerturbationSpec, run_consistency, run_contraction,
                                   run_convergence, run_perturbation, stepsize_threshold)
from quasistep.integrators import StepperConfig, StepState, integrate, step
from quasistep.problems import (commutator_apply, kdv_problem, manufactured, symmetric_system_problem,
                                transport_problem)
from quasistep.spaces import SpaceConfig
from quasistep.tableau import (algebraic_stability_matrix, certify, gauss, quadrature_order, radau_iia,
                               stage_order)

TAUS = [1 / (40 * 2**j) for j in range(5)]
CATALOG = [gauss(m) for m in (1, 2, 3, 4)] + [radau_iia(m) for m in (1, 2, 3)]


def p1(n=128):
    return manufactured(transport_problem(SpaceConfig(n), 1.0, 1.0))


def p3(n=64):
    return manufactured(kdv_problem(SpaceConfig(n), 0.01))


def test_criterion_1_tableau_certification():
    bad = []
    for t in CATALOG:
        cert = certify(t)
        m = t.m
        q_expected = 2 * m if t.family_label == "gauss" else 2 * m - 1
        ok = (cert.weights_positive and cert.algstab_min_eig >= -1e-12 and cert.coercivity_alpha > 0
              and stage_order(t) == m and quadrature_order(t) == q_expected)
        if t.family_label == "gauss":
            ok = ok and np.max(np.abs(algebraic_stability_matrix(t))) <= 1e-13
        if not ok:
            bad.append(t.label)
    alphas = ", ".join(f"{t.label} a={certify(t).coercivity_alpha:.3g}" for t in CATALOG)
    assert record(1, "tableau certification", not bad, alphas if not bad else f"failed: {bad}")


def test_criterion_2_midpoint_order():
    p = p1()
    details, ok = [], True
    for method in ("midpoint_li", "midpoint_fi"):
        r = run_convergence(ConvergenceSpec(p, method, taus=TAUS, expected_order=2.0, tolerance=0.15))
        ok &= r.passed
        details.append(f"{method} {r.fitted_order:.3f}")
    c = run_consistency(p, "midpoint_li", TAUS, expected_order=2.0, tolerance=0.15)
    ok &= c.passed
    details.append(f"LI defect first {c.meta['first_step_order']:.3f} interior {c.fitted_order:.3f}")
    assert record(2, "midpoint rules order 2", ok, "; ".join(details))


def _order_case(problem, tab, taus, expected, one_sided=False):
    r = run_convergence(ConvergenceSpec(problem, tab, taus=taus, expected_order=expected, tolerance=0.25,
                                        one_sided=one_sided))
    return r.passed, f"{problem.name} {tab.label} {r.fitted_order:.3f}"


def test_criterion_3_irk_orders():
    taus_g3 = [1 / (5 * 2**j) for j in range(5)]
    ok, details = True, []
    for prob in (p1(), p3()):
        for tab, taus, expected, one_sided in ((gauss(2), TAUS, 4.0, False), (radau_iia(2), TAUS, 3.0, False),
                                               (gauss(3), taus_g3, 5.75, True)):
            passed, text = _order_case(prob, tab, taus, expected, one_sided)
            ok &= passed
            details.append(text)
    assert record(3, "gauss(2) 4, radau_iia(2) 3, gauss(3) >= 5.5 on P1 and P3", ok, "; ".join(details))


def test_criterion_4_contraction():
    sp = SpaceConfig(64)
    problems = [transport_problem(sp, 1.0, 1.0), symmetric_system_problem(sp), kdv_problem(sp, 0.01)]
    methods = ["midpoint_li", "midpoint_fi"] + CATALOG
    failures, worst_growth, worst_drift = [], 0.0, 0.0
    for prob in problems:
        for method in methods:
            r = run_contraction(prob, method, 1e-3, 1.0)
            worst_growth = max(worst_growth, r.meta["max_growth_x"] - 1.0)
            if isinstance(method, str):
                worst_drift = max(worst_drift, r.meta["x_drift"])
            if not r.passed:
                failures.append(f"{prob.name}/{r.meta['method']}")
    ok = not failures and worst_drift <= 1e-10
    assert record(4, "X-norm contraction over 1000 steps", ok,
                  f"max growth-1 {worst_growth:.2e}, midpoint drift {worst_drift:.2e}"
                  + (f", failed {failures}" if failures else ""))


def test_criterion_5_perturbation_scaling():
    p = p1()
    cases = [("midpoint_fi", "midpoint"), ("midpoint_li", "midpoint"), (gauss(2), "stages"), (gauss(2), "update")]
    ok, details = True, []
    for method, site in cases:
        r = run_perturbation(PerturbationSpec(p, method, tau=1 / 80, site=site, tolerance=0.1))
        ok &= r.passed
        label = method if isinstance(method, str) else method.label
        details.append(f"{label}@{site} {r.fitted_order:.4f}")
    assert record(5, "perturbation slope 1", ok, "; ".join(details))


def test_criterion_6_structural_equivalences():
    p = p1()
    u0 = p.exact_solution(0.0)
    g1, _ = integrate(p, u0, StepperConfig(1 / 40, gauss(1)), 1.0)
    fi, _ = integrate(p, u0, StepperConfig(1 / 40, "midpoint_fi"), 1.0)
    d1 = float(np.max(np.abs(g1.states - fi.states)))

    lin = manufactured(transport_problem(SpaceConfig(128), 1.0, 0.0))
    cfg_li, cfg_fi = StepperConfig(1 / 40, "midpoint_li"), StepperConfig(1 / 40, "midpoint_fi")
    state = StepState(lin.exact_solution(0.0))
    d2 = 0.0
    for n in range(40):
        a, _ = step(lin, state, cfg_li)
        b, _ = step(lin, state, cfg_fi)
        d2 = max(d2, float(np.max(np.abs(a - b))))
        state = StepState(b, (n + 1) / 40, n + 1, state.u_current)

    sp = SpaceConfig(128)
    a0, tau = 1.0, 1 / 40
    lin0 = transport_problem(sp, a0, 0.0)
    k = np.arange(sp.n_points // 2 + 1)
    z = -1j * a0 * tau * np.sin(k * sp.h) / sp.h
    r22 = (1 + z / 2 + z * z / 12) / (1 - z / 2 + z * z / 12)
    u = sp.band_limited(np.random.default_rng(0), 32)
    cfg = StepperConfig(tau, gauss(2))
    state = StepState(u)
    d3 = 0.0
    for n in range(40):
        new, _ = step(lin0, state, cfg)
        oracle = np.fft.irfft(np.fft.rfft(state.u_current) * r22, n=sp.n_points)
        d3 = max(d3, float(np.max(np.abs(new - oracle))))
        state = StepState(new, (n + 1) * tau, n + 1, state.u_current)
    ok = d1 <= 1e-12 and d2 <= 1e-12 and d3 <= 1e-10
    assert record(6, "structural equivalences", ok,
                  f"gauss(1)-FI {d1:.1e}, LI-FI linear {d2:.1e}, gauss(2)-Pade {d3:.1e}")


def test_criterion_7_stepsize_restriction():
    sp = SpaceConfig(128)
    p = transport_problem(sp, 1.0, 1.0)
    u0 = np.sin(sp.x)
    taus = [0.00625 * 2 ** (k / 4) for k in range(40) if 0.00625 * 2 ** (k / 4) <= 1.0 + 1e-12]
    ok, details = True, []
    for method in ("midpoint_fi", gauss(2), radau_iia(2)):
        res = stepsize_threshold(p, u0, method, taus, max_ok_iters=8)
        ok &= res["demonstrated"]
        label = method if isinstance(method, str) else method.label
        star = res["tau_star"]
        details.append(f"{label} tau*={star:.4g}" if star else f"{label} no divergence")
    assert record(7, "fixed-point stepsize restriction", ok, "; ".join(details))


def test_criterion_8_kato_checks():
    rng = np.random.default_rng(8)
    sp = SpaceConfig(64)
    problems = [transport_problem(sp, 1.0, 1.0), symmetric_system_problem(sp), kdv_problem(sp, 0.01)]
    skew = 0.0
    for prob in problems:
        s = prob.space
        for _ in range(100):
            y = rng.standard_normal(s.dof)
            w = rng.standard_normal(s.dof)
            skew = max(skew, abs(s.inner_x(w, prob.apply_A(y, w))) / s.norm_x(w) ** 2)

    const = [(transport_problem(sp, 1.0, 0.0), rng.standard_normal(64)),
             (kdv_problem(sp, 0.01), np.full(64, 0.3)),
             (symmetric_system_problem(sp), np.full(128, 0.5))]
    vanish = 0.0
    for prob, y in const:
        for _ in range(20):
            w = prob.space.band_limited(rng, 16)
            vanish = max(vanish, prob.space.norm_x(commutator_apply(prob, y, w)))

    spread = 0.0
    for prob in problems:
        s = prob.space
        y = 0.5 * s.sample(lambda x: np.stack([np.sin(x), np.cos(x)]) if s.components == 2 else np.sin(x))
        ratios = []
        for _ in range(50):
            w = s.band_limited(rng, 16)
            ratios.append(s.norm_x(commutator_apply(prob, y, w)))
        spread = max(spread, max(ratios) / float(np.median(ratios)))
    ok = skew <= 1e-11 and vanish <= 1e-11 and spread <= 10
    assert record(8, "Kato desk checks", ok,
                  f"skew {skew:.1e}, constant-coefficient commutator {vanish:.1e}, max/median {spread:.2f}")


STUDY_CONFIGS = {
    "converge": "[space]\nn_points = 64\n[method]\nname = gauss\nstages = 2\n[study]\ntaus = 1/40, 1/80, 1/160\n",
    "perturb": ("[space]\nn_points = 64\n[method]\nname = gauss\nstages = 2\n"
                "[study]\ntau = 1/40\nsite = stages+update\ndefect = random\nseed = 99\n"),
    "contract": "[space]\nn_points = 32\n[problem]\nkind = system\nmanufactured = false\n[study]\ntau = 1/200\nT = 1/2\n",
    "consistency": "[space]\nn_points = 64\n[method]\nname = midpoint_li\n[study]\ntaus = 1/40, 1/80, 1/160\n",
    "run": "[space]\nn_points = 64\n[problem]\nkind = kdv\n[method]\nname = radau_iia\nstages = 2\n[run]\ntau = 1/40\nT = 1\n",
}
OUTPUTS = {"run": ("trajectory.csv", "steps.csv")}


def test_criterion_9_determinism(tmp_path):
    mismatched = []
    for cmd, text in STUDY_CONFIGS.items():
        cfg = tmp_path / f"{cmd}.ini"
        cfg.write_text(text)
        first, second = tmp_path / f"{cmd}_a", tmp_path / f"{cmd}_b"
        code_a = main([cmd, "--config", str(cfg), "--out", str(first)])
        code_b = main([cmd, "--config", str(first / "effective_config.ini"), "--out", str(second)])
        names = OUTPUTS.get(cmd, ("report.csv", "report_summary.json"))
        same = code_a == code_b == 0 and all((first / n).read_bytes() == (second / n).read_bytes() for n in names)
        if not same:
            mismatched.append(cmd)
    assert record(9, "CLI re-run from echoed config is bit-identical", not mismatched,
                  f"{len(STUDY_CONFIGS)} subcommands" + (f", mismatched {mismatched}" if mismatched else ""))

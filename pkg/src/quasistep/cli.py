"""Command-line entry point: ``quasistep <subcommand> [options]``."""

from __future__ import annotations

import argparse
from pathlib import Path
import sys

from . import reporting
from .config import ConfigError, RunConfig
from .experiments import (ConvergenceSpec, PerturbationSpec, StudyError, run_consistency,
                          run_contraction, run_convergence, run_perturbation)
from .integrators import StepError, integrate
from .tableau import TableauError, certify, format_tableau, from_family, load_tableau

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _err(msg):
    print(f"error: {msg}", file=sys.stderr)


def build_parser():
    parser = _Parser(prog="quasistep", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    tab = sub.add_parser("tableau", help="print and certify a Butcher tableau")
    tab.add_argument("--family", choices=["gauss", "radau_iia"])
    tab.add_argument("--stages", type=int)
    tab.add_argument("--file", type=Path)

    for name, help_text in (("run", "integrate one configuration"),
                            ("converge", "convergence-order study"),
                            ("perturb", "defect-perturbation study"),
                            ("contract", "norm contraction study"),
                            ("consistency", "consistency-defect study")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", type=Path, required=True)
        p.add_argument("--out", type=Path)
        p.add_argument("--seed", type=int)
        p.add_argument("--jobs", type=int, default=1)
    return parser


def cmd_tableau(args) -> int:
    try:
        if args.file is not None:
            if args.family is not None or args.stages is not None:
                raise TableauError("use either --file or --family/--stages")
            if not args.file.is_file():
                raise TableauError(f"tableau file {args.file} does not exist")
            t = load_tableau(args.file)
        else:
            if args.family is None or args.stages is None:
                raise TableauError("--family and --stages are required without --file")
            t = from_family(args.family, args.stages)
        cert = certify(t)
    except (TableauError, ValueError) as exc:
        _err(str(exc))
        return EXIT_USAGE
    print(f"# {t.label}")
    print(format_tableau(t, digits=16), end="")
    for line in cert.lines():
        print(line)
    print("PASS" if cert.passed else "FAIL")
    return EXIT_OK if cert.passed else EXIT_FAIL


def _prepare(args):
    cfg = RunConfig.from_file(args.config)
    if args.seed is not None:
        cfg.values["study"]["seed"] = args.seed
    out = cfg.output_dir(args.out)
    cfg.values["output"]["dir"] = out
    return cfg, out


def _echo(cfg, out):
    out.mkdir(parents=True, exist_ok=True)
    (out / "effective_config.ini").write_text(cfg.to_text())


def cmd_run(args) -> int:
    cfg, out = _prepare(args)
    problem = cfg.problem()
    stepper = cfg.stepper(cfg.require("run", "tau"))
    T = cfg.require("run", "T")
    u0 = cfg.initial_value(problem)
    _echo(cfg, out)
    try:
        traj, reports = integrate(problem, u0, stepper, T, stride=cfg.get("run", "stride"))
    except StepError as exc:
        _err(str(exc))
        return EXIT_FAIL
    reporting.write_trajectory(out / "trajectory.csv", traj)
    reporting.write_step_reports(out / "steps.csv", reports)
    sp = problem.space
    print(f"steps {len(reports)}  t {traj.final_time!r}")
    print(f"norm_x {sp.norm_x(traj.final)!r}  norm_y {sp.norm_y(traj.final)!r}")
    if problem.exact_solution is not None:
        err = traj.final - problem.exact_solution(traj.final_time)
        print(f"error_x {sp.norm_x(err)!r}  error_y {sp.norm_y(err)!r}")
    return EXIT_OK


def _finish(report, out) -> int:
    reporting.write_study(out / "report.csv", report)
    print(f"order {report.fitted_order:.4f} {report.verdict()}")
    if "fit_error" in report.meta:
        _err(report.meta["fit_error"])
    return EXIT_OK if report.passed else EXIT_FAIL


def _default_tolerance(expected):
    return 0.15 if expected is not None and expected <= 2.0 else 0.25


def cmd_converge(args) -> int:
    cfg, out = _prepare(args)
    problem = cfg.problem()
    ref = cfg.get("study", "reference")
    if ref == "exact" and problem.exact_solution is None:
        raise ConfigError("study.reference = exact needs problem.manufactured = true")
    expected = cfg.expected_order()
    spec = ConvergenceSpec(
        problem, cfg.method(), taus=cfg.require("study", "taus"), T=cfg.get("study", "T"),
        norm=cfg.get("study", "norm"), reference=ref, tau_ref=cfg.get("study", "tau_ref"),
        expected_order=expected, tolerance=cfg.get("study", "tolerance", _default_tolerance(expected)),
        one_sided=cfg.get("study", "one_sided"), fp_tol=cfg.get("method", "fp_tol"),
        fp_max_iters=cfg.get("method", "fp_max_iters"))
    try:
        spec.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    _echo(cfg, out)
    return _finish(run_convergence(spec, jobs=args.jobs), out)


def cmd_perturb(args) -> int:
    cfg, out = _prepare(args)
    problem = cfg.problem()
    if problem.exact_solution is None:
        raise ConfigError("perturbation studies need problem.manufactured = true")
    spec = PerturbationSpec(
        problem, cfg.method(), tau=cfg.require("study", "tau"), T=cfg.get("study", "T"),
        epsilons=cfg.get("study", "epsilons", [1e-2, 1e-3, 1e-4, 1e-5]),
        site=cfg.get("study", "site"), defect=cfg.get("study", "defect"),
        seed=cfg.get("study", "seed"), expected_order=cfg.get("study", "expected_order", 1.0),
        tolerance=cfg.get("study", "tolerance", 0.1), fp_tol=cfg.get("method", "fp_tol"),
        fp_max_iters=cfg.get("method", "fp_max_iters"))
    try:
        spec.validate()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    _echo(cfg, out)
    return _finish(run_perturbation(spec, jobs=args.jobs), out)


def cmd_contract(args) -> int:
    cfg, out = _prepare(args)
    problem = cfg.problem()
    if not problem.is_pure:
        raise ConfigError("contraction studies need problem.manufactured = false and no semilinear term")
    tau, T = cfg.require("study", "tau"), cfg.get("study", "T")
    _echo(cfg, out)
    report = run_contraction(problem, cfg.method(), tau, T, cfg.initial_value(problem),
                             fp_tol=cfg.get("method", "fp_tol"),
                             fp_max_iters=cfg.get("method", "fp_max_iters"))
    reporting.write_study(out / "report.csv", report)
    m = report.meta
    print(f"max_growth_x {m['max_growth_x']!r}  x_drift {m['x_drift']:.3e}  "
          f"y_growth_C {m['y_growth_C_max']:.4f} {report.verdict()}")
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_consistency(args) -> int:
    cfg, out = _prepare(args)
    problem = cfg.problem()
    if problem.exact_solution is None:
        raise ConfigError("consistency studies need problem.manufactured = true")
    method = cfg.method()
    kwargs = {}
    if "expected_order" in cfg.values["study"]:
        kwargs["expected_order"] = cfg.values["study"]["expected_order"]
    if "tolerance" in cfg.values["study"]:
        kwargs["tolerance"] = cfg.values["study"]["tolerance"]
    _echo(cfg, out)
    report = run_consistency(problem, method, cfg.require("study", "taus"), cfg.get("study", "T"), **kwargs)
    code = _finish(report, out)
    if "first_step_order" in report.meta:
        print(f"first step order {report.meta['first_step_order']:.4f}")
    return code


COMMANDS = {"tableau": cmd_tableau, "run": cmd_run, "converge": cmd_converge,
            "perturb": cmd_perturb, "contract": cmd_contract, "consistency": cmd_consistency}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        _err(str(exc))
        return EXIT_USAGE
    except StudyError as exc:
        _err(str(exc))
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())

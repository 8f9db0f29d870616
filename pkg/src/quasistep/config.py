"""INI run configuration: parsing, validation, defaults and echo.

Grammar: ``[section]`` headers and ``key = value`` lines; ``#`` and ``;``
start comment lines. Numbers may be written as fractions (``1/40``). Lists
are comma separated. Unknown sections or keys are rejected with their line.
"""

from __future__ import annotations

import configparser
from fractions import Fraction
import math
from pathlib import Path
import re

import numpy as np

from .integrators import StepperConfig
from .problems import (kdv_problem, manufactured, symmetric_system_problem, transport_problem,
                       zero_problem)
from .spaces import SpaceConfig
from .tableau import classical_order, from_family, load_tableau, TableauError

SCHEMA = {
    "space": {"n_points": "int", "domain_length": "float", "sobolev_s": "float"},
    "problem": {"kind": "str", "a0": "float", "a1": "float", "dispersion": "float",
                "constant": "float", "manufactured": "bool", "amplitude": "float"},
    "method": {"name": "str", "stages": "int", "tableau_file": "path", "fp_tol": "float",
               "fp_max_iters": "int"},
    "run": {"tau": "float", "T": "float", "stride": "int"},
    "study": {"taus": "floats", "T": "float", "tau": "float", "norm": "str", "reference": "str",
              "tau_ref": "float", "expected_order": "float", "tolerance": "float",
              "one_sided": "bool", "epsilons": "floats", "site": "str", "defect": "str",
              "seed": "int"},
    "output": {"dir": "path"},
}

DEFAULTS = {
    "space": {"n_points": 128, "domain_length": 2 * math.pi, "sobolev_s": 1.0},
    "problem": {"kind": "transport", "a0": 1.0, "a1": 1.0, "dispersion": 0.01, "constant": 0.0,
                "manufactured": True, "amplitude": 0.5},
    "method": {"name": "midpoint_fi", "stages": 1, "fp_tol": 1e-12, "fp_max_iters": 100},
    "run": {"stride": 1},
    "study": {"T": 1.0, "norm": "Y", "reference": "exact", "one_sided": False,
              "site": "midpoint", "defect": "smooth"},
    "output": {"dir": "out"},
}

PROBLEM_KINDS = ("transport", "system", "kdv", "zero")
METHOD_NAMES = ("midpoint_li", "midpoint_fi", "gauss", "radau_iia", "file")


class ConfigError(ValueError):
    def __init__(self, message, lineno=None, path=None):
        self.lineno = lineno
        where = ""
        if path is not None:
            where = f"{path}:"
        if lineno is not None:
            where += f"line {lineno}: "
        elif where:
            where += " "
        super().__init__(where + message)


def _line_index(text):
    index, section = {}, None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        m = re.match(r"\[([^\]]+)\]", line)
        if m:
            section = m.group(1).strip()
            index.setdefault((section, None), lineno)
            continue
        key = re.split(r"[=:]", line, maxsplit=1)[0].strip()
        index.setdefault((section, key), lineno)
    return index


def _convert(kind, raw, base_dir):
    if kind == "int":
        return int(raw)
    if kind == "float":
        return float(Fraction(raw)) if "/" in raw else float(raw)
    if kind == "floats":
        vals = [_convert("float", tok.strip(), base_dir) for tok in raw.split(",") if tok.strip()]
        if not vals:
            raise ValueError("empty list")
        return vals
    if kind == "bool":
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if kind == "path":
        p = Path(raw)
        return p if p.is_absolute() or base_dir is None else (base_dir / p)
    return raw


class RunConfig:
    """Parsed configuration with defaults resolved."""

    def __init__(self, values: dict, source=None):
        self.values = values
        self.source = source

    # -- construction --------------------------------------------------------

    @classmethod
    def from_text(cls, text, source=None, base_dir=None):
        parser = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"),
                                           inline_comment_prefixes=None, strict=True)
        parser.optionxform = str
        try:
            parser.read_string(text, source=str(source or "<config>"))
        except configparser.Error as exc:
            lineno = getattr(exc, "lineno", None)
            raise ConfigError(str(exc).splitlines()[0], lineno, source) from None
        lines = _line_index(text)
        values = {sec: dict(vals) for sec, vals in DEFAULTS.items()}
        for section in parser.sections():
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]", lines.get((section, None)), source)
            for key, raw in parser.items(section):
                lineno = lines.get((section, key))
                if key not in SCHEMA[section]:
                    raise ConfigError(f"unknown key {key!r} in [{section}]", lineno, source)
                try:
                    values[section][key] = _convert(SCHEMA[section][key], raw.strip(), base_dir)
                except (ValueError, ZeroDivisionError) as exc:
                    raise ConfigError(f"bad value for {section}.{key}: {exc}", lineno, source) from None
        cfg = cls(values, source)
        cfg._lines = lines
        cfg._check()
        return cfg

    @classmethod
    def from_file(cls, path):
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file {path} does not exist")
        return cls.from_text(path.read_text(), source=path, base_dir=path.parent)

    def _err(self, section, key, message):
        lineno = getattr(self, "_lines", {}).get((section, key))
        return ConfigError(message, lineno, self.source)

    def _check(self):
        v = self.values
        if v["problem"]["kind"] not in PROBLEM_KINDS:
            raise self._err("problem", "kind", f"problem.kind must be one of {PROBLEM_KINDS}")
        if v["method"]["name"] not in METHOD_NAMES:
            raise self._err("method", "name", f"method.name must be one of {METHOD_NAMES}")
        if v["method"]["name"] == "file":
            path = v["method"].get("tableau_file")
            if path is None:
                raise self._err("method", "name", "method.name = file needs method.tableau_file")
            if not Path(path).is_file():
                raise self._err("method", "tableau_file", f"tableau file {path} does not exist")
        try:
            self.space()
        except ValueError as exc:
            raise self._err("space", None, str(exc)) from None
        self.method()

    # -- accessors -------------------------------------------------------------

    def get(self, section, key, default=None):
        return self.values[section].get(key, default)

    def require(self, section, key):
        if key not in self.values[section]:
            raise self._err(section, None, f"missing required key {section}.{key}")
        return self.values[section][key]

    def space(self) -> SpaceConfig:
        s = self.values["space"]
        comps = 2 if self.values["problem"]["kind"] == "system" else 1
        return SpaceConfig(s["n_points"], s["domain_length"], s["sobolev_s"], comps)

    def problem(self):
        p = self.values["problem"]
        sp = self.space()
        kind = p["kind"]
        if kind == "transport":
            base = transport_problem(sp, p["a0"], p["a1"])
        elif kind == "system":
            base = symmetric_system_problem(sp)
        elif kind == "kdv":
            base = kdv_problem(sp, p["dispersion"])
        else:
            base = zero_problem(sp, p["constant"])
        return manufactured(base) if p["manufactured"] else base

    def initial_value(self, problem):
        """Exact initial value when available, otherwise ``amplitude * sin(2 pi x / L)``."""
        if problem.exact_solution is not None:
            return problem.exact_solution(0.0)
        sp = problem.space
        k = 2 * math.pi / sp.domain_length
        amp = self.values["problem"]["amplitude"]
        if sp.components == 1:
            return sp.sample(lambda x: amp * np.sin(k * x))
        return sp.sample(lambda x: np.stack([amp * np.sin(k * x), amp * np.cos(k * x)]))

    def method(self):
        m = self.values["method"]
        name = m["name"]
        try:
            if name in ("midpoint_li", "midpoint_fi"):
                return name
            if name == "file":
                return load_tableau(m["tableau_file"])
            return from_family(name, m["stages"])
        except (TableauError, ValueError) as exc:
            raise self._err("method", "stages" if name != "file" else "tableau_file", str(exc)) from None

    def stepper(self, tau) -> StepperConfig:
        m = self.values["method"]
        return StepperConfig(tau, self.method(), m["fp_tol"], m["fp_max_iters"])

    def expected_order(self):
        if "expected_order" in self.values["study"]:
            return self.values["study"]["expected_order"]
        method = self.method()
        if isinstance(method, str):
            return 2.0
        p = classical_order(method)
        return float(p) if p else None

    def output_dir(self, override=None) -> Path:
        return Path(override) if override is not None else Path(self.values["output"]["dir"])

    # -- echo --------------------------------------------------------------------

    def to_text(self) -> str:
        lines = []
        for section in SCHEMA:
            vals = self.values[section]
            if not vals:
                continue
            lines.append(f"[{section}]")
            for key in SCHEMA[section]:
                if key not in vals:
                    continue
                lines.append(f"{key} = {_format(vals[key])}")
            lines.append("")
        return "\n".join(lines)


def _format(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, list):
        return ", ".join(_format(v) for v in value)
    if isinstance(value, Path):
        return str(value.resolve())
    return str(value)

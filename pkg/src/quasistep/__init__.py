"""Time discretizations of quasi-linear evolution equations u' + A(u)u = f(u)."""

from ._backend import backend_name
from .spaces import SpaceConfig, lu_solve, sym_eigenvalues
from .problems import (commutator_apply, kdv_problem, manufactured, shifted_solve,
                       symmetric_system_problem, transport_problem, zero_problem)
from .tableau import Tableau, certify, gauss, radau_iia
from .integrators import DefectInjector, StepperConfig, integrate

__version__ = "0.1.0"

__all__ = [
    "backend_name", "SpaceConfig", "lu_solve", "sym_eigenvalues",
    "transport_problem", "symmetric_system_problem", "kdv_problem", "zero_problem",
    "manufactured", "shifted_solve", "commutator_apply",
    "Tableau", "gauss", "radau_iia", "certify",
    "DefectInjector", "StepperConfig", "integrate",
]

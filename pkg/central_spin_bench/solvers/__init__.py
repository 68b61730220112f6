from typing import Dict, Type

from ..exceptions import ConfigurationError
from ..solver import Solver
from .exact import ExactSolver
from .modified import LargeNSolver, ModifiedTcl2Solver
from .tcl2 import Tcl2Solver

SOLVERS: Dict[str, Type[Solver]] = {
    solver.NAME: solver for solver in (ExactSolver, Tcl2Solver, ModifiedTcl2Solver, LargeNSolver)
}


def make_solver(name: str, *, workers=None, exact_cap=None) -> Solver:
    if name not in SOLVERS:
        raise ConfigurationError(f"Unknown method '{name}'. Choose from {', '.join(SOLVERS)}.")
    if name == ExactSolver.NAME and exact_cap is not None:
        return ExactSolver(exact_cap=exact_cap)
    if name == Tcl2Solver.NAME:
        return Tcl2Solver(workers=workers)
    return SOLVERS[name]()

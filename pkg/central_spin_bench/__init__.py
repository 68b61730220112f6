from central_spin_bench.model import (
    BlockDensity, CouplingProfile, build_couplings, build_sectors, initial_block_state)
from central_spin_bench.solver import Solver, TrajectoryRecord
from central_spin_bench.solvers import SOLVERS
from central_spin_bench.version import VERSION

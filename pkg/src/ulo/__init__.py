"""Upper/lower-model global minimisation of a minimum of convex pieces."""
from .cost import CostModel, gamma_es, gamma_ulo, upsilon
from .oracle import LPOracle, OracleResult, make_oracle
from .problem import BasicSet, MSProblem, eval_F, feasible, load_problem, save_problem
from .solvers import SolverConfig, enumeration, ram, ulo

__version__ = "0.1.0"

__all__ = [
    "BasicSet", "CostModel", "LPOracle", "MSProblem", "OracleResult", "SolverConfig", "enumeration", "eval_F",
    "feasible", "gamma_es", "gamma_ulo", "load_problem", "make_oracle", "ram", "save_problem", "ulo", "upsilon",
]

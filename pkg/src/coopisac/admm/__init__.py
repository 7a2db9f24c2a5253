"""Consensus-ADMM solver for the max-min radar mutual information problem."""
from .solver import ConvergenceTrace, Solver, initial_state, residuals, solve
from .state import ConsensusState, DualState, Problem, SolverConfig

__all__ = [
    "ConsensusState", "ConvergenceTrace", "DualState", "Problem", "Solver",
    "SolverConfig", "initial_state", "residuals", "solve",
]

"""Maximal pairwise graph alignment via an exact 0-1 program."""

from .diff import diff_pdgs
from .problem import (Alignment, AlignmentError, AlignmentProblem, GraphView,
                      IlpInstance, InfeasiblePins, Mode, SolverBudgetExceeded,
                      ViewNode, build_alignment_ilp, build_space)
from .solver import BACKEND, DEFAULT_SOLVER_CAP, IlpSolution, align, \
    kernel_for, solve_ilp

__all__ = [
    "Alignment", "AlignmentError", "AlignmentProblem", "BACKEND",
    "DEFAULT_SOLVER_CAP", "GraphView", "IlpInstance", "IlpSolution",
    "InfeasiblePins", "Mode", "SolverBudgetExceeded", "ViewNode", "align",
    "build_alignment_ilp", "build_space", "diff_pdgs", "kernel_for",
    "solve_ilp",
]

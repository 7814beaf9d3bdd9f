"""Bayesian networks compiled into general-equilibrium economies whose prices are probabilities."""

from marketbayes.compiler import compile_network
from marketbayes.config import SolverConfig
from marketbayes.logic import ContradictionError, Literal, Proposition
from marketbayes.network import BayesNet, Node, load_network, moralize, parse_network
from marketbayes.oracle import conjunction_probability, full_joint_table, joint_probability
from marketbayes.solver import check_equilibrium, solve

__all__ = [
    "BayesNet",
    "ContradictionError",
    "Literal",
    "Node",
    "Proposition",
    "SolverConfig",
    "check_equilibrium",
    "compile_network",
    "conjunction_probability",
    "full_joint_table",
    "joint_probability",
    "load_network",
    "moralize",
    "parse_network",
    "solve",
]

__version__ = "0.1.0"

"""Recoverability and identifiability workbench for coupled CP models of 3D marginals."""
from .coupling import Coupling, make_balanced, make_cartesian, make_full, make_random, stats
from .errors import InvalidArgument, ResourceExhausted
from .parameterization import ParamVector, jacobian, mu, sample_params
from .recoverability import RmaxResult, n_obs, necessary_bound, numerical_rank, rmax_search
from .report import BoundReport

__all__ = [
    "BoundReport",
    "Coupling",
    "InvalidArgument",
    "ParamVector",
    "ResourceExhausted",
    "RmaxResult",
    "jacobian",
    "make_balanced",
    "make_cartesian",
    "make_full",
    "make_random",
    "mu",
    "n_obs",
    "necessary_bound",
    "numerical_rank",
    "rmax_search",
    "sample_params",
    "stats",
]

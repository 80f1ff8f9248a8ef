"""Numerical experiments on weighted norm inequalities for singular, fractional,
square-function and maximal operators on a uniform lattice."""
from . import (config, corpus, grid, kernels, maximal, norms, operators, verify, weights,
               whitney, young)
from .errors import ConfigInvalid, IOFailure, WnilError
from .grid import Ball, BallFamily, BallPolicy, GridFunction, ball_family
from .maximal import fractional_maximal, hl_maximal
from .norms import SpaceParams, lebesgue_norm, lorentz_morrey_norm, lorentz_norm, morrey_norm
from .operators import CZKernelSpec, cz_apply, fractional_integral
from .reports import InequalityReport
from .verify import OperatorSpec, good_lambda_trace, norm_transfer_experiment
from .weights import ap_constant, rh_constant, weight_from_json
from .whitney import verify_cover, whitney_decompose

__version__ = "0.1.0"

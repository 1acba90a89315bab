"""Numerical laboratory for Fisher-KPP transition fronts in almost periodic media."""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .coeff import (APReport, BohrMean, CoefficientField, Grid1D, ap_diagnostic, bohr_mean,
                    eval_coefficients)
from .decay import DecayProfile, MuCurve, mu, mu_curve, phi_gamma
from .eigen import (EigenEstimate, Hyp1Report, KpCurve, dirichlet_eigenpair, hyp1_diagnostic, k_p,
                    kp_curve, lambda1, rayleigh_quotient)
from .errors import (APFrontsError, ArgumentError, ConvergenceError, DiscretizationError, DomainError,
                     RangeError, SchemeError, SolverError)
from .frontsim import (FrontState, ProfileU, SandwichSpec, build_sandwich, build_theta, extract_profile,
                       march_front, prepare_front, run_front, solve_kappa, spread_front)
from .speed import SpeedReport, gamma_for_speed, shift_zero_order, speed_report

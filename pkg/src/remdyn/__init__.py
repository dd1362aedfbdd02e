"""Random hopping dynamics of the Random Energy Model.

Scales, lazily generated landscapes, the jump-chain/clock construction of the
dynamics, correlation estimators, closed-form limits and exact oracles.
"""

__version__ = "0.1.0"

from .scales import ModelParams, Scales, solve_scales, beta_c, alpha_of, mixing_steps, h_n, g_n_inv
from .landscape import Landscape, PoissonCascade, lepage_build, energy
from .dynamics import ClockTrajectory, run_trajectory, state_at, rescaled_clock, centered_clock
from .estimators import Ensemble, CorrelationEstimate, estimate_nojump, estimate_overlap, critical_sweep
from .limits import LevyTail, asl_cdf, levy_tail, stationary_corr, critical_prediction, moment_predictions

__all__ = [
    "ModelParams", "Scales", "solve_scales", "beta_c", "alpha_of", "mixing_steps", "h_n", "g_n_inv",
    "Landscape", "PoissonCascade", "lepage_build", "energy",
    "ClockTrajectory", "run_trajectory", "state_at", "rescaled_clock", "centered_clock",
    "Ensemble", "CorrelationEstimate", "estimate_nojump", "estimate_overlap", "critical_sweep",
    "LevyTail", "asl_cdf", "levy_tail", "stationary_corr", "critical_prediction", "moment_predictions",
]

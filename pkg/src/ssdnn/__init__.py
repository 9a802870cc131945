"""Subagging estimation with fully-connected ReLU networks."""

from .bias import BiasEstimate, estimate_bias, solve_power_law
from .errors import ConfigError, DataError, NoPowerLawFit, NumericalError, SSDNNError, TrainingDiverged
from .intervals import (IntervalResult, KappaPair, Method, ResidualDistribution, empirical_quantile,
                        fit_residuals, pci1, pci_enlarged, prediction_interval, qci1, qci2_iterated)
from .nn_core import NetworkParams, NetworkSpec, TrainConfig, auto_spec, forward, param_count, train
from .simgen import SimModel, fixed_test_points, generate, true_f
from .subagging import (IteratedEnsemble, SubaggingEnsemble, fit_iterated, fit_subagging,
                        predict_members, predict_mean)
from .subsampling import BlockPlan, block_indices, iterated_plan, plan_from_beta

__version__ = "0.1.0"

"""Numerical toolkit for photon-number-difference filtering of two-mode
Fock states: the ideal projection filter and its operational tap +
feed-forward implementation."""

__version__ = "0.1.0"

from ._accel import active_backend, set_backend
from .errors import (ConfigError, DegenerateConditioningError,
                     EmptyAcceptanceError)
from .ideal import (DistinguishabilityReport, FilterThreshold,
                    JointPhotonDistribution, LossChannel,
                    distinguishability, distinguishability_vs_loss,
                    lossy_photon_distribution, project_mdf, summary_metrics,
                    threshold_sweep)
from .numerics import (LogAmplitude, krawtchouk_row, krawtchouk_sum,
                       log_binomial, log_factorial, signed_logsum)
from .operational import (ConditionalJoint, DetectionOutcome,
                          DiffDistribution, SingleCopyConditionals, TapSpec,
                          TrustPolicy, acceptance_probability,
                          lossy_transmitted_joint, pbs_conditional_diff,
                          processed_photon_distribution,
                          processed_photon_distributions, shutter_decision,
                          transmitted_diff_marginal, transmitted_joint,
                          two_mode_convolution)
from .states import (GainParam, StateEnsemble, TwoModeFockState, macro_qubit,
                     macro_qubit_mixture, uniform_diff_state)

__all__ = [
    "ConfigError", "ConditionalJoint", "DegenerateConditioningError",
    "DetectionOutcome", "DiffDistribution", "DistinguishabilityReport",
    "EmptyAcceptanceError", "FilterThreshold", "GainParam",
    "JointPhotonDistribution", "LogAmplitude", "LossChannel",
    "SingleCopyConditionals", "StateEnsemble", "TapSpec", "TrustPolicy",
    "TwoModeFockState", "acceptance_probability", "active_backend",
    "distinguishability", "distinguishability_vs_loss", "krawtchouk_row",
    "krawtchouk_sum", "log_binomial", "log_factorial",
    "lossy_photon_distribution", "lossy_transmitted_joint", "macro_qubit",
    "macro_qubit_mixture", "pbs_conditional_diff",
    "processed_photon_distribution", "processed_photon_distributions",
    "project_mdf", "set_backend", "shutter_decision", "signed_logsum",
    "summary_metrics", "threshold_sweep", "transmitted_diff_marginal",
    "transmitted_joint", "two_mode_convolution", "uniform_diff_state",
]

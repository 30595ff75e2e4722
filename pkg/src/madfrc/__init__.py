"""Movable-antenna dual-function radar-communication design library.

Jointly designs symbol-level transmit waveforms, space-time receive filters,
and linear-array antenna placements to maximize the worst per-target radar
SINR under communication quality-of-service and peak-power constraints.
"""

__version__ = "0.1.0"

from .channel import Apv, StackedChannels, build_stacked, shift_matrix, steering_vector
from .comm_ci import CiConstraintSet, build_ci_set, ci_coefficient, ci_geometric_check, ci_margins
from .errors import ConfigError, DegenerateTargetError, InfeasibleScenarioError, SolverError
from .placement import displacements_to_apv, fpa_apv, logits_to_apv, validate_apv
from .radar import interference_covariance, min_sinr, mvdr_filter, radar_sinr, sinr_closed_form
from .scenario import ScenarioRealization, SystemConfig, config_from_json, draw_symbols, path_loss, sample_scenario
from .td3 import Td3Hyper, Td3Nets, build_state, ou_noise_scale, train
from .waveform import CcpOptions, Waveform, WaveformSolution, initialize_waveform, lemma1_minorizer, penalty_ccp, surrogate_params

__all__ = [name for name in dir() if not name.startswith("_")]

"""Secret-key agreement over compound sources: rates, coding and simulation."""

__version__ = "0.1.0"

from .capacity import (AuxChannelPair, SearchConfig, degraded_capacity,
                       degraded_capacity_report, lower_bound_curve, mi_continuity_bound,
                       quantize_family, auxiliary_lower_bound, multi_letter_value,
                       converse_identity_check)
from .errors import BudgetError, CompoundSKError, DomainError, GuardError, SpecError
from .estimation import chernoff_exponent, estimate_error_curve, estimate_marginal
from .extraction import (KeyExtractor, draw_extractor, extractor_deviation_bound, good_set_security_bound,
                         security_index)
from .prob import entropy, mutual_information
from .protocol import ProtocolConfig, run_protocol, security_over_draws, sweep
from .source import CompoundSource, bsc, cascade_joint, check_degraded, marginal_partition
from .specfile import load_spec, parse_spec_text
from .typicality import TypicalityParams

__all__ = [
    "AuxChannelPair", "BudgetError", "CompoundSKError", "CompoundSource", "DomainError",
    "GuardError", "KeyExtractor", "ProtocolConfig", "SearchConfig", "SpecError",
    "TypicalityParams", "bsc", "cascade_joint", "check_degraded", "chernoff_exponent",
    "degraded_capacity", "degraded_capacity_report", "draw_extractor", "entropy",
    "estimate_error_curve", "estimate_marginal", "extractor_deviation_bound", "good_set_security_bound",
    "load_spec", "lower_bound_curve", "marginal_partition", "mi_continuity_bound",
    "mutual_information", "parse_spec_text", "quantize_family", "run_protocol",
    "security_index", "security_over_draws", "sweep", "auxiliary_lower_bound", "multi_letter_value",
    "converse_identity_check",
]

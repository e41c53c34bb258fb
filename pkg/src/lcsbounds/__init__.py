"""Certified lower bounds on Chvatal-Sankoff constants by the feasible-triplet method."""

__version__ = "0.1.0"

from .binary import apply_F_binary, binary_feasible_triplet
from .codec import Params, decode_tuple, encode_tuple, interleave_pair
from .errors import (
    CapacityError,
    ConfigurationError,
    InvalidInputError,
    LCSBoundsError,
    StoreIOError,
)
from .general import apply_F, feasible_triplet, f_z
from .iteration import StopRule, TripletResult
from .oracle import estimate_gamma, exact_expected_lcs, lcs_length
from .store import StoreConfig, plan_recursion

__all__ = [
    "CapacityError",
    "ConfigurationError",
    "InvalidInputError",
    "LCSBoundsError",
    "Params",
    "StopRule",
    "StoreConfig",
    "StoreIOError",
    "TripletResult",
    "apply_F",
    "apply_F_binary",
    "binary_feasible_triplet",
    "decode_tuple",
    "encode_tuple",
    "estimate_gamma",
    "exact_expected_lcs",
    "f_z",
    "feasible_triplet",
    "interleave_pair",
    "lcs_length",
    "plan_recursion",
]

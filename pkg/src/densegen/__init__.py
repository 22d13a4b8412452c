"""Two-generator dense matrix semigroups: construction, Υ calculus and word synthesis."""

from .errors import DensegenError
from .generators import DensityScope, GeneratorPair, build_pair, casen2_pair, casen3_pair
from .synthesis import ApproxResult, SearchBudget, approx_matrix, beam_search
from .upsilon import UpsilonPoint, combine_points, same_fiber_factor, upsilon_of
from .words import Word, evaluate_word

__version__ = "0.1.0"

__all__ = [
    "ApproxResult",
    "DensegenError",
    "DensityScope",
    "GeneratorPair",
    "SearchBudget",
    "UpsilonPoint",
    "Word",
    "approx_matrix",
    "beam_search",
    "build_pair",
    "casen2_pair",
    "casen3_pair",
    "combine_points",
    "evaluate_word",
    "same_fiber_factor",
    "upsilon_of",
]

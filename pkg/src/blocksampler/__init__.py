"""Variable density sampling with block constraints.

Computes a distribution over a dictionary of k-space blocks (discrete lines)
whose induced pixel density fits a target density in total variation, with an
entropic regulariser. The fit is solved on the dual side with an accelerated
first-order method in configurable norms; the package also draws sampling
schemes from the result and scores them with l1 reconstructions.
"""

from blocksampler.blocks_dictionary import (
    BlockDictionary,
    build_line_dictionary,
    build_row_column_dictionary,
    rasterize_line,
    validate_dictionary,
)
from blocksampler.dual_solver import SolverConfig, solve
from blocksampler.errors import InputError, NumericalError, UnsupportedError

__version__ = "0.1.0"

__all__ = [
    "BlockDictionary",
    "InputError",
    "NumericalError",
    "SolverConfig",
    "UnsupportedError",
    "build_line_dictionary",
    "build_row_column_dictionary",
    "rasterize_line",
    "solve",
    "validate_dictionary",
]

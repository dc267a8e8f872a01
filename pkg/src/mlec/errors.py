"""Exception hierarchy.

Every domain error carries a stable ``code`` string; the CLI copies it into the
``error`` field of the JSON report so failures are machine readable.
"""

from __future__ import annotations


class MlecError(Exception):
    """Base class for all domain errors (CLI exit code 1)."""

    code = "MLEC_ERROR"


class ConfigError(Exception):
    """Base class for configuration problems (CLI exit code 2)."""

    code = "CONFIG_ERROR"


class ParseError(ConfigError):
    code = "PARSE_ERROR"


class ValidationError(ConfigError):
    code = "VALIDATION_ERROR"

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


# alphabet_codec
class DuplicateSymbol(MlecError):
    code = "DUPLICATE_SYMBOL"


class WordLengthMismatch(MlecError):
    code = "WORD_LENGTH_MISMATCH"


class UnknownSymbol(MlecError):
    code = "UNKNOWN_SYMBOL"


class IndexOutOfRange(MlecError):
    code = "INDEX_OUT_OF_RANGE"


class NoOneHotSolution(MlecError):
    code = "NO_ONE_HOT_SOLUTION"


class AmbiguousCode(MlecError):
    code = "AMBIGUOUS_CODE"


class Infeasible(MlecError):
    code = "INFEASIBLE"


class ShapeMismatch(MlecError):
    code = "SHAPE_MISMATCH"


# code_geometry
class LengthMismatch(MlecError):
    code = "LENGTH_MISMATCH"


class SingletonCode(MlecError):
    code = "SINGLETON_CODE"


class EntropyExceedsSpace(MlecError):
    code = "ENTROPY_EXCEEDS_SPACE"


class SpaceTooLarge(MlecError):
    code = "SPACE_TOO_LARGE"


# noise_channel
class DegenerateAlphabet(MlecError):
    code = "DEGENERATE_ALPHABET"


class MaskMismatch(MlecError):
    code = "MASK_MISMATCH"


# energy_model
class NotDifferentiable(MlecError):
    code = "NOT_DIFFERENTIABLE"


# pipeline_sim
class DimensionMismatch(MlecError):
    code = "DIMENSION_MISMATCH"


class ConfigMismatch(MlecError):
    code = "CONFIG_MISMATCH"


# continuous_info
class GridMismatch(MlecError):
    code = "GRID_MISMATCH"


class NotAProductDensity(MlecError):
    code = "NOT_A_PRODUCT_DENSITY"

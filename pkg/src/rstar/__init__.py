"""Natural rate of interest estimation with HLW's and the corrected Stage-2 MUE pipelines."""
from .errors import IoError, NumericalError, RstarError, ValidationError

__version__ = "0.1.0"
__all__ = ["IoError", "NumericalError", "RstarError", "ValidationError", "__version__"]

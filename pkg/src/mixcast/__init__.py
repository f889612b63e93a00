"""mixcast: mixer-style multivariate time-series forecasting.

The package is self-contained: a small reverse-mode autodiff engine over
dense float64 tensors, mixer layers built on it, four model families,
training, data handling, hierarchical metrics, and a CLI.
"""

from .errors import MixcastError
from .tensor import Tape, Tensor

__version__ = "0.1.0"

__all__ = ["MixcastError", "Tape", "Tensor", "__version__"]

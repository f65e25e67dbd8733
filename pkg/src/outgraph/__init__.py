"""Bayesian conditional-independence graphs for stationary multivariate
time series, via orthogonal rotation of independent univariate components
and a frequency-domain pseudo-likelihood."""

from . import kernels
from .params import ModelState

__version__ = "0.1.0"
__all__ = ["ModelState", "kernels", "__version__"]

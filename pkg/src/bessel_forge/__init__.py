"""Numerical tools for Bessel pairs, radial quasilinear ODEs and weighted
Hardy/Rellich inequalities on Euclidean space and stratified groups."""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .errors import BesselForgeError
from .weights import WeightFn, parse_weight

__all__ = ["BACKEND", "BesselForgeError", "WeightFn", "parse_weight", "__version__"]

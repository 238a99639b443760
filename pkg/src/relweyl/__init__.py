"""Numerical laboratory for relative Weyl laws of singular radial potentials."""

from relweyl.unbounded import UNBOUNDED, is_unbounded

__version__ = "0.1.0"
__all__ = ["UNBOUNDED", "is_unbounded", "__version__"]

"""Exact p-adic series, twisted polynomials and log-growth estimation."""
from .padics import INF, PadicContext, PadicScalar

__all__ = ["INF", "PadicContext", "PadicScalar"]
__version__ = "0.1.0"

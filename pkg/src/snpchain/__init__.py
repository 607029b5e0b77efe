"""Exact and numeric toolkit for open spin chains with soliton non-preserving boundaries."""
from __future__ import annotations

from .field import LAM, Poly, PoleError, RatFunc, rf_arith, rf_eval, rf_residue

__version__ = "0.1.0"

__all__ = ["LAM", "Poly", "PoleError", "RatFunc", "rf_arith", "rf_eval", "rf_residue", "__version__"]

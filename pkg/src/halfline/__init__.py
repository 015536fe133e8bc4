"""Weighted-L1 heat semigroups of singular and degenerate operators on the half-line."""

__version__ = "0.1.0"

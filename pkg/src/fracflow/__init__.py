"""Fractional curve flows: Caputo calculus, N-adapted geometry, mKdV hierarchies."""

__version__ = "0.1.0"

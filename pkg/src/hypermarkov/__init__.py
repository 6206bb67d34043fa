"""Numerical toolkit for hyperbounded Markov operators."""
__version__ = "0.1.0"

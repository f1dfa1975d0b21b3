"""Ensemble empirical mode decomposition and multi-scale hedge/safe-haven
regression for asset price series."""

__version__ = "0.1.0"

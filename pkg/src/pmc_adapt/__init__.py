"""Adaptive D-kernel population Monte Carlo."""
__version__ = "0.1.0"

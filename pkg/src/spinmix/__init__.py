"""Exact ground states of two coupled spin-1 Bose condensates in a single-mode picture."""

__version__ = "0.1.0"

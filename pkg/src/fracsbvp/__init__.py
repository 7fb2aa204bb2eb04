"""Positive solutions of a bilateral Caputo boundary-value problem on [-1, 1]."""

__version__ = "0.1.0"

"""Readability assessment for Filipino with global and local model interpretation."""

__version__ = "0.1.0"

"""Verification workbench for the fourth-derivative exponential-sum bound."""

__version__ = "0.1.0"

"""Workbench for coalition logic over stochastic games with failure states."""

__version__ = "0.1.0"

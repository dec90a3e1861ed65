"""Estimation and comparison of Weibull-Gamma production lines under joint progressive censoring."""

__version__ = "0.1.0"

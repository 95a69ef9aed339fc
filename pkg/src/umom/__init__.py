"""Robust mean estimators built on U-statistics, with exact decomposition tools
and a Monte Carlo lab for their deviation tails."""

__version__ = "0.1.0"

"""Consumption under bounded agency: solver, probes and ruin cohorts."""

__version__ = "0.1.0"

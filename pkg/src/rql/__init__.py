"""Exact state-vector simulator for Rydberg-array quenches at the TFIM limit."""

__version__ = "0.1.0"

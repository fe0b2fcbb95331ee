"""Discrete-event simulator for two-level DRF allocation with a demand-aware queue manager."""

__version__ = "0.1.0"

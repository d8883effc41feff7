"""Simulation and analysis of two-colour EPR entanglement from a below-threshold NOPO."""

__version__ = "0.1.0"

"""Simulation and analysis of a planar branching network and its rectangle decomposition."""

__version__ = "0.1.0"

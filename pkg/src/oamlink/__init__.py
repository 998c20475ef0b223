"""Simulation and analysis of OAM-entangled photon up-conversion experiments."""

__version__ = "0.1.0"

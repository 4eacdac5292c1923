"""Simulation and analysis of heterodyne double-resonance nuclear-spin sensing."""

__version__ = "0.1.0"

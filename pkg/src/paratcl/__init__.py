"""Perturbative TCL corrections to the parametric approximation of a dissipative Jaynes-Cummings model."""

__version__ = "0.1.0"

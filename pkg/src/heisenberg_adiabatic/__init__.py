"""Adiabatic state transfer and entanglement distribution on Heisenberg spin networks."""

__version__ = "0.1.0"

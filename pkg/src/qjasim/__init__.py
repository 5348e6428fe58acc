"""Quantum Jarzynski annealing simulator."""

__version__ = "0.1.0"

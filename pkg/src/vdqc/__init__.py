"""Simulation lab and threshold calculator for noise-robust multi-round verification
of delegated quantum computation."""

__version__ = "0.1.0"

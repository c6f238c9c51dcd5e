"""Quantum model discovery: differentiable quantum circuits trained to
solve, infer and discover differential equations from data."""

__version__ = "0.1.0"

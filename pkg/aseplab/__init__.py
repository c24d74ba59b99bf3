"""Numerical lab for open ASEP stationary measures and Askey-Wilson signed measures."""

__version__ = "0.1.0"

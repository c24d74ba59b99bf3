"""Numerical services of the lab."""

"""Numerical laboratory for Neumann heat flow on nonconvex planar domains."""

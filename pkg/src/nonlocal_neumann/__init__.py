"""Nonlocal Neumann problems on the half-line with jump-reflection boundary models."""

__version__ = "0.1.0"

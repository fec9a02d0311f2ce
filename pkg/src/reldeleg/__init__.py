"""Desk-scale simulator for relativistic verifiable delegation games."""

__version__ = "0.1.0"

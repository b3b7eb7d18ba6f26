"""Desk-scale laboratory for descent algorithms on hard-to-learn function families."""

__version__ = "0.1.0"

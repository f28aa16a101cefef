"""Verification of reactive policies over equalized transition systems."""

__version__ = "0.1.0"

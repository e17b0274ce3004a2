"""Earthquake reconnaissance text analytics pipeline."""

__version__ = "0.1.0"

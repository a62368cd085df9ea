"""Polar code construction by log-domain Gaussian approximation."""

__version__ = "0.1.0"

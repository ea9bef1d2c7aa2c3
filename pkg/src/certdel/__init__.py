"""Simulation harness for device-independent encryption with certified deletion."""

__version__ = "0.1.0"

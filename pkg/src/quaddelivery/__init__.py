"""Quadcopter delivery planning, flight simulation and edge detection."""

__version__ = "0.1.0"

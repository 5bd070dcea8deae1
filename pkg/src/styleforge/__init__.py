"""Driving-style transfer testbed: 2D simulator, policy networks, training and evaluation."""

__version__ = "0.1.0"

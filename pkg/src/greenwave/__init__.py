"""Freeway-arterial corridor simulator with Q-learning signal timing and offset agents."""

__version__ = "0.1.0"

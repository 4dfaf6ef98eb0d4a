"""Hybrid channel allocation with minimal-power control for cellular networks."""

__version__ = "0.1.0"

"""Quadrotor ship-landing flight simulation."""

__version__ = "0.1.0"

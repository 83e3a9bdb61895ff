"""Numerical lab for time-fractional diffusion-wave equations with nonlinear memory."""

__version__ = "0.1.0"

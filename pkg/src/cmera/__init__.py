"""Gaussian cMERA for the free boson: profiles, kernels, correlators, generators."""

__version__ = "0.1.0"

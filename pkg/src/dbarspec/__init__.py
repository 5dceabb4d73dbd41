"""Numerical spectral analysis of the weighted dbar-Neumann problem on C^n."""

__version__ = "0.1.0"

"""Simulation and verification lab for the nonautonomous Schrodinger flow into S^2."""

from ._kernels import BACKEND

__version__ = "0.1.0"

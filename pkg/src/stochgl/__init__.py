"""Simulation and verification tools for the stochastic real Ginzburg-Landau
equation on the torus driven by cylindrical symmetric alpha-stable noise."""

__version__ = "0.1.0"

from .dynamics import NumericAbort, SimConfig, Trajectory, simulate
from .noise import NoiseSpectrum
from .spectral import DomainError, SpectralField

__all__ = ["DomainError", "NoiseSpectrum", "NumericAbort", "SimConfig", "SpectralField", "Trajectory", "simulate",
           "__version__"]

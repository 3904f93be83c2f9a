"""Spectra of a harmonic trap with PT-symmetric imaginary delta loss and gain."""
from .model import ProblemParams, UnperturbedLevel, unperturbed_spectrum, classical_turning_point

__version__ = "0.1.0"

__all__ = ["ProblemParams", "UnperturbedLevel", "unperturbed_spectrum",
           "classical_turning_point", "__version__"]

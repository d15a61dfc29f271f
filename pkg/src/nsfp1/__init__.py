"""Linear and nonlinear analysis tools for the Navier-Stokes-Fourier-P1 perturbation system."""

__version__ = "0.1.0"

"""Pseudo-spectral Navier-Stokes-Maxwell and Hall-MHD simulation on periodic boxes."""
from .spectral import Grid, NormSpec, SpectralField, make_grid
from .systems import PhysParams, PlasmaState, System
from .timestepping import StepperConfig, Trajectory, integrate, step

__all__ = ["Grid", "NormSpec", "SpectralField", "make_grid", "PhysParams", "PlasmaState",
           "System", "StepperConfig", "Trajectory", "integrate", "step"]
__version__ = "0.1.0"

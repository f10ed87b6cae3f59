"""Design and characterization toolkit for kinetic-inductance traveling-wave
parametric amplifiers (KITs)."""

__version__ = "0.1.0"

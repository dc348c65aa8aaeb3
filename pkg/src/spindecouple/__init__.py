"""Spin-selective pi-pulse decoupling: design construction, sequence synthesis and simulation."""

__version__ = "0.1.0"

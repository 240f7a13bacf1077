"""Simulation and characterization of variable-stiffness elbow joints."""
__version__ = "0.1.0"

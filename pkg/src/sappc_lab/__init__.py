"""Simulation laboratory for singularity-avoidance prescribed-performance
attitude tracking."""

__version__ = "0.1.0"

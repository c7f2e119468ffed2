"""Figure rendering for sappc-lab CSV outputs."""

__version__ = "0.1.0"

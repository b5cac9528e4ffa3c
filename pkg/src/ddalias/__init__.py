"""Demand-driven alias analysis for a small object-oriented IR."""
__version__ = "0.1.0"

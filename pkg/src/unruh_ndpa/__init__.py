"""Vacuum photon-pair production by an oscillating detector and its circuit analogue."""

__version__ = "0.1.0"

"""Distributed cooperative ISAC beamforming and user scheduling with consensus ADMM."""
__version__ = "0.1.0"

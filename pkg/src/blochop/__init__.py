"""Weighted composition operators W_{psi,phi}: Bloch space -> weighted H-infinity."""

__version__ = "0.1.0"

"""Tangent-ray bifoliations and outer billiards on umbilic hypersurfaces."""

__version__ = "0.1.0"

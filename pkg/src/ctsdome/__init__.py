"""Statics, stability and deployment dynamics of clustered tensegrity cable domes."""

__version__ = "0.1.0"

"""Homology localization on simplicial complexes."""
__version__ = "0.1.0"

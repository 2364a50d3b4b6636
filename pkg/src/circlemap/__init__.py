"""Renormalized energies of circle-valued harmonic maps with point
singularities on multiply connected planar domains."""

__version__ = "0.1.0"

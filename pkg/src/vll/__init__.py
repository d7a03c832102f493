"""Desk-scale laboratory for the inviscid limit of compressible flow
with density-dependent viscosity and damping."""

__version__ = "0.1.0"

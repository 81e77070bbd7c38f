"""Ensemble timestepping for 2D Boussinesq natural convection.

A Taylor-Hood (P2-P1-P2) finite element solver advancing J flow/temperature
ensemble members with a second-order BDF2 IMEX scheme whose implicit
operators depend only on the extrapolated ensemble-average velocity: one
factorization per sub-problem per step, J right-hand sides.
"""

__version__ = "0.1.0"

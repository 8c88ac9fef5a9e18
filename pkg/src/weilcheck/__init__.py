"""Exact and numerical checks of weighted theta forms, their Green functions and
star products on signature (1,2) orthogonal and signature (1,1) unitary curves."""

__version__ = "0.1.0"

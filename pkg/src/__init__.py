"""
Exact-arithmetic toolkit for plane birational maps: degree sequences,
oscillation synthesis, algebraic stability and the Halphen lattice.
"""

__version__ = "0.3.0"

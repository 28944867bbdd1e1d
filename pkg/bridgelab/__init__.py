"""
Bridge Lab

Closed-form oracles, exact path simulation and Monte Carlo verification for
Wiener and Ornstein-Uhlenbeck bridges built three ways (anticipative version,
integral representation, space-time transform).
"""

__version__ = "0.1.0"

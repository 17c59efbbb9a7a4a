"""Lacunary Riesz products, ball schemes and witness functions for multipliers on W^{1,1}(R^2)."""

__version__ = "0.1.0"

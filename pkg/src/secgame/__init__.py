"""Stochastic security game with imperfect state perception."""

__version__ = "0.1.0"

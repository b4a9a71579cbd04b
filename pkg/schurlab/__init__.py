"""
SchurLab: divided differences, multilinear Schur multipliers and
Schatten-class norm experiments.
"""

__version__ = "0.1.0"

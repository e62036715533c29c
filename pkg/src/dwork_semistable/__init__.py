"""Semistable charts, unimodular subdivisions and monodromy checks for the Dwork pencil."""

__version__ = "0.1.0"

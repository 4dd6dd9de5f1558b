"""Desk-scale simulation of a three-path test for third-order interference."""

__version__ = "0.1.0"

"""Invariants of loops of embedded circles in S^1 x S^3."""

__version__ = "0.1.0"

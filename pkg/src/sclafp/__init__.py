"""Stable commutator length in amalgamated free products of free abelian groups."""

__version__ = "0.1.0"

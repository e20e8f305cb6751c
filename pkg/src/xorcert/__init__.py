"""Parity-reasoning SAT toolkit with machine-checkable clausal proofs."""

__version__ = "0.1.0"

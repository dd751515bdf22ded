"""Hypercubes of commutative Frobenius extensions and their diagram calculus."""

__version__ = "0.1.0"

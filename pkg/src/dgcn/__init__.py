"""Directed graph convolutional networks built on first- and second-order proximity."""

__version__ = "0.1.0"

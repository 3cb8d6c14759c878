"""Amortised cost-bound inference for first-order tree programs."""

__version__ = "0.1.0"

"""Numerical link-map invariants: double points, linking numbers and the
cubic triple-linking obstruction."""

__version__ = "0.1.0"

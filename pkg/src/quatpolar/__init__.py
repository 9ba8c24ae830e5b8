"""Indefinite quaternion linear algebra: canonical forms, square roots, Witt extensions
and H-polar decompositions."""

__all__ = ["__version__"]
__version__ = "0.1.0"

"""Phase factors of vertex operators attached to isolated singularities."""

__version__ = "0.1.0"

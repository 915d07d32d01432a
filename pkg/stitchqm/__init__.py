"""Top-level package for stitchqm."""

__version__ = "0.1.0"

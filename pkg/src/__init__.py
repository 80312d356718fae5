"""holepoint: critical points of elliptic solutions on domains with a small hole."""

__version__ = "0.1.0"

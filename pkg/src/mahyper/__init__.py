"""mahyper: symbolic toolkit for hyperbolic Monge-Ampere PDE systems."""

__version__ = "0.1.0"

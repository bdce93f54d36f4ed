"""Polar code construction by (piecewise) Gaussian approximation, SC decoding and FER simulation."""

__version__ = "0.1.0"

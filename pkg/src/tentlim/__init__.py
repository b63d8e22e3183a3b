"""Symbolic and numeric tools for inverse limits of Fibonacci-like tent maps."""

__version__ = "0.1.0"

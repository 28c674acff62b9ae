"""Dataset generation and evaluation toolkit for mobile UI screen understanding."""

__version__ = "0.1.0"

"""stream-trust - A label-free streaming uncertainty monitor."""

__version__ = "0.1.0"

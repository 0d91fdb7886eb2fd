"""Push rumor spreading simulator comparing fully random and quasirandom calls."""

__version__ = "0.1.0"

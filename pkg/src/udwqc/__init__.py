"""Design toolkit for Unruh-DeWitt qubit networks on quantum spin Hall edges."""

__version__ = "0.1.0"

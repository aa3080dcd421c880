"""Push/block random interface growth with last passage percolation checks."""

__version__ = "0.1.0"

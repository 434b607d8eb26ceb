"""Country-level transit influence metrics from BGP path snapshots."""

__version__ = "0.1.0"

"""Non-differential cyclic distributed space-time block codes for two-hop relay networks."""

__version__ = "0.1.0"

"""Exact kernel and residual harness for the truncated CMC hierarchy with Virasoro symmetries."""

__version__ = "0.1.0"

"""Exact counts, samplers and volume-growth experiments for the uniform
infinite well-labeled tree and its associated quadrangulation."""

__version__ = "0.1.0"

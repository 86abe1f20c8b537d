"""Federated training of Kolmogorov-Arnold networks and MLPs with pluggable server aggregation."""

__version__ = "0.1.0"

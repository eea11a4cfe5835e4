"""Constrained pattern sampling with random XOR partitioning."""

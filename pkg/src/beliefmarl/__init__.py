"""Cooperative multi-agent RL with variational state beliefs, agent-modelling
filters, dual critics and count-based intrinsic exploration."""

__version__ = "0.1.0"

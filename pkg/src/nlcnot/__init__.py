"""Simulator for a measurement/feed-forward nonlocal CNOT between two
cavity-QED network nodes, with analytic noise formulas and a deterministic
Monte Carlo harness."""

from . import cavity, harness, noise, protocol, qstate

__all__ = ["cavity", "harness", "noise", "protocol", "qstate"]
__version__ = "0.1.0"

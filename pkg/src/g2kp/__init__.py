"""Exact MILP models for the guillotine two-dimensional knapsack problem."""

from g2kp.instance import Bounds, Instance, InstanceError, Piece, generate_random_instance, parse_instance, read_instance, render_instance

__version__ = "0.1.0"

__all__ = [
    "Bounds",
    "Instance",
    "InstanceError",
    "Piece",
    "generate_random_instance",
    "parse_instance",
    "read_instance",
    "render_instance",
]

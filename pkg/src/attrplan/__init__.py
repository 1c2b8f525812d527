"""Planning over structured attribute spaces.

States of a grid world map to attribute vectors in a product of groups and
monoids (N, Z, R, Z/qZ). An edge detector learns which attribute deltas are
feasible, exploration and execution policies feed it labels, and Dijkstra
over the learned transition graph reaches attribute goals at test time.
"""
from .algebra import (AttributeSpace, GroupBlock, Int, ModQ, Nat, Real, compose, diff, encode,
                      quantize, regressor_loss)
from .config import RunConfig, default_config
from .planner import Goal, Plan, plan

__version__ = "0.1.0"

__all__ = ["AttributeSpace", "GroupBlock", "Int", "ModQ", "Nat", "Real", "compose", "diff",
           "encode", "quantize", "regressor_loss", "RunConfig", "default_config", "Goal", "Plan",
           "plan"]

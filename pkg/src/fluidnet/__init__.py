"""Labeled fluid stochastic Petri nets: modelling, CTMC and stationary fluid
analysis, trace/bisimulation equivalences, quotient reduction, fluid modal
logics, performance measures and Monte-Carlo simulation."""

from .model import Lfspn, Transition, parse_net, serialize_net, validate_net, enabled, fire
from .reachability import Drg, explore

__all__ = [
    "Lfspn",
    "Transition",
    "parse_net",
    "serialize_net",
    "validate_net",
    "enabled",
    "fire",
    "Drg",
    "explore",
]

__version__ = "0.1.0"

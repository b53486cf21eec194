"""Discrete reachability set and graph, built by budgeted BFS.

BFS discovery order (ties broken by transition list order) fixes the state
indices, so all derived matrices are reproducible across runs.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

from .errors import StateBudgetExceeded
from .model import Lfspn, Marking, enabled, fire, format_rational, transition_rate

DEFAULT_MAX_STATES = 100_000


@dataclass(frozen=True)
class Edge:
    source: int
    transition: str
    rate: Fraction
    target: int


@dataclass(frozen=True)
class Drg:
    """Discrete reachability graph; index 0 is the initial marking."""

    states: tuple[Marking, ...]
    edges: tuple[Edge, ...]
    index: Mapping[Marking, int] = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "index", {m: i for i, m in enumerate(self.states)})

    def __len__(self) -> int:
        return len(self.states)

    def out_edges(self, i: int) -> list[Edge]:
        return [e for e in self.edges if e.source == i]

    def to_dict(self) -> dict:
        return {
            "states": [list(m) for m in self.states],
            "edges": [[e.source, e.transition, format_rational(e.rate), e.target] for e in self.edges],
        }


def explore(net: Lfspn, max_states: int = DEFAULT_MAX_STATES) -> Drg:
    """Breadth-first closure of the firing relation from the initial marking.

    Raises STATE_BUDGET_EXCEEDED as soon as the reachability set would grow
    past ``max_states`` (the net may be unbounded).
    """
    if max_states < 1:
        raise ValueError("max_states must be at least 1")
    initial = net.initial_marking
    states: list[Marking] = [initial]
    index: dict[Marking, int] = {initial: 0}
    edges: list[Edge] = []
    queue: deque[int] = deque([0])
    while queue:
        i = queue.popleft()
        m = states[i]
        for t in enabled(net, m):
            target = fire(net, m, t)
            j = index.get(target)
            if j is None:
                if len(states) >= max_states:
                    raise StateBudgetExceeded(
                        f"reachability set exceeds the budget of {max_states} states",
                        max_states=max_states,
                    )
                j = len(states)
                states.append(target)
                index[target] = j
                queue.append(j)
            edges.append(Edge(i, t.name, transition_rate(net, t, m), j))
    return Drg(tuple(states), tuple(edges))

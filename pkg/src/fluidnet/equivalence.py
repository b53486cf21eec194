"""Fluid trace equivalence (depth-bounded) and fluid bisimulation.

Bisimulation is decided by signature-based partition refinement over the
disjoint union of the two nets' discrete markings: the initial blocks group
states by potential drift, and a block splits whenever two members disagree
on some per-action rate into some block. All comparisons are exact
rationals. Trace equivalence compares the full sets of fluid stochastic
traces up to a bounded depth.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence

from .ctmc import MaybeInf, embedded_tpm, sojourn_stats
from .errors import MultiContinuous, TerminalMarking
from .model import Lfspn, Marking, enabled, fire, format_rational, transition_rate
from .reachability import Drg
from .sfm import potential_rate

TaggedState = tuple[str, int]

DEFAULT_TRACE_DEPTH = 6


@dataclass(frozen=True)
class FluidStochasticTrace:
    """((sigma, varsigma, varrho), probability): the action sequence, the
    sojourn-time sequence and the drift sequence of the traversed markings
    (one entry more than sigma), with the cumulative execution probability.
    """

    sigma: tuple[str, ...]
    varsigma: tuple[MaybeInf, ...]
    varrho: tuple[Fraction, ...]
    prob: Fraction

    def key(self) -> tuple:
        return (self.sigma, self.varsigma, self.varrho)

    def to_dict(self) -> dict:
        return {
            "actions": list(self.sigma),
            "sojourns": [format_rational(s) if s is not None else "inf" for s in self.varsigma],
            "rates": [format_rational(r) for r in self.varrho],
            "prob": format_rational(self.prob),
        }


@dataclass(frozen=True)
class Partition:
    """Disjoint blocks of tagged states, ordered by their smallest member."""

    blocks: tuple[tuple[TaggedState, ...], ...]
    lookup: Mapping[TaggedState, int] = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(
            self, "lookup", {s: b for b, states in enumerate(self.blocks) for s in states}
        )

    def __len__(self) -> int:
        return len(self.blocks)

    def classes_for(self, tag: str) -> list[list[int]]:
        """Block members restricted to one net, block order preserved."""
        out = []
        for states in self.blocks:
            members = sorted(i for t, i in states if t == tag)
            if members:
                out.append(members)
        return out

    def to_dict(self) -> dict:
        return {"classes": [[[t, i] for t, i in states] for states in self.blocks]}


@dataclass(frozen=True)
class EquivalenceVerdict:
    equivalent: bool
    kind: str
    depth: Optional[int] = None
    witness: Optional[dict] = None
    partition: Optional[Partition] = None

    def to_dict(self) -> dict:
        doc: dict = {"equivalent": self.equivalent, "kind": self.kind}
        if self.depth is not None:
            doc["depth"] = self.depth
        if self.witness is not None:
            doc["witness"] = self.witness
        if self.partition is not None:
            doc.update(self.partition.to_dict())
        return doc


# --- trace machinery ---------------------------------------------------------

def _per_state_data(net: Lfspn, drg: Drg):
    stats = sojourn_stats(net, drg)
    rp = [potential_rate(net, m) for m in drg.states]
    succ: list[list[tuple[str, Fraction, int]]] = [[] for _ in drg.states]
    for i, m in enumerate(drg.states):
        re = stats.re[i]
        for t in enabled(net, m):
            target = drg.index[fire(net, m, t)]
            succ[i].append((t.label, transition_rate(net, t, m) / re, target))
    return stats, rp, succ


def fluid_traces(
    net: Lfspn, drg: Drg, depth: int, key: str = "sj"
) -> list[FluidStochasticTrace]:
    """All fluid stochastic traces of length up to ``depth``.

    Paths are grouped by (action sequence, sojourn sequence, drift sequence)
    with exact rational keys; probabilities of grouped paths are summed. With
    key="re" the exit-rate sequences replace the sojourn-time sequences.
    """
    if len(net.continuous_places) != 1:
        raise MultiContinuous("fluid traces need exactly one continuous place")
    stats, rp, succ = _per_state_data(net, drg)

    def timing(i: int) -> MaybeInf:
        return stats.re[i] if key == "re" else stats.sj[i]

    traces: dict[tuple, Fraction] = {}
    # frontier maps (sigma, varsigma, varrho, state) -> cumulative probability
    frontier: dict[tuple, Fraction] = {
        ((), (timing(0),), (rp[0],), 0): Fraction(1)
    }
    for sigma, varsigma, varrho, _ in frontier:
        traces[(sigma, varsigma, varrho)] = Fraction(1)
    for _ in range(depth):
        nxt: dict[tuple, Fraction] = {}
        for (sigma, varsigma, varrho, state), prob in frontier.items():
            for label, pt, target in succ[state]:
                k = (
                    sigma + (label,),
                    varsigma + (timing(target),),
                    varrho + (rp[target],),
                    target,
                )
                nxt[k] = nxt.get(k, Fraction(0)) + prob * pt
        for (sigma, varsigma, varrho, _), prob in nxt.items():
            tk = (sigma, varsigma, varrho)
            traces[tk] = traces.get(tk, Fraction(0)) + prob
        frontier = nxt
        if not frontier:
            break
    out = [FluidStochasticTrace(s, v, r, p) for (s, v, r), p in traces.items()]
    out.sort(key=lambda tr: (len(tr.sigma), tr.sigma, tr.varrho, tr.varsigma))
    return out


def trace_equivalent(
    net_a: Lfspn,
    drg_a: Drg,
    net_b: Lfspn,
    drg_b: Drg,
    depth: int = DEFAULT_TRACE_DEPTH,
    key: str = "sj",
) -> EquivalenceVerdict:
    """Equality of the two fluid stochastic trace sets up to the given depth.

    The verdict is depth-bounded: equivalence here means "no distinguishing
    trace of length <= depth exists".
    """
    ta = {t.key(): t.prob for t in fluid_traces(net_a, drg_a, depth, key)}
    tb = {t.key(): t.prob for t in fluid_traces(net_b, drg_b, depth, key)}
    if ta == tb:
        return EquivalenceVerdict(True, "trace", depth=depth)
    diff = sorted(
        (k for k in set(ta) | set(tb) if ta.get(k) != tb.get(k)),
        key=lambda k: (len(k[0]), k[0]),
    )
    sigma, varsigma, varrho = diff[0]
    witness = {
        "trace": FluidStochasticTrace(sigma, varsigma, varrho, Fraction(0)).to_dict(),
        "prob_left": format_rational(ta[diff[0]]) if diff[0] in ta else None,
        "prob_right": format_rational(tb[diff[0]]) if diff[0] in tb else None,
    }
    witness["trace"].pop("prob")
    return EquivalenceVerdict(False, "trace", depth=depth, witness=witness)


# --- bisimulation ------------------------------------------------------------

def refine_partition(nets: Mapping[str, tuple[Lfspn, Drg]]) -> Partition:
    """Coarsest partition of the tagged union stable under drift values and
    per-action block rates; this is the largest fluid bisimulation relation
    on the union of the discrete reachability sets.
    """
    states: list[TaggedState] = []
    rp: dict[TaggedState, Fraction] = {}
    succ: dict[TaggedState, list[tuple[str, Fraction, TaggedState]]] = {}
    for tag, (net, drg) in nets.items():
        if len(net.continuous_places) != 1:
            raise MultiContinuous("fluid bisimulation needs exactly one continuous place per net")
        for i, m in enumerate(drg.states):
            s = (tag, i)
            states.append(s)
            rp[s] = potential_rate(net, m)
            succ[s] = [
                (t.label, transition_rate(net, t, m), (tag, drg.index[fire(net, m, t)]))
                for t in enabled(net, m)
            ]

    def block_sort(blocks: list[list[TaggedState]]) -> tuple[tuple[TaggedState, ...], ...]:
        return tuple(tuple(sorted(b)) for b in sorted(blocks, key=lambda b: min(b)))

    groups: dict[Fraction, list[TaggedState]] = {}
    for s in states:
        groups.setdefault(rp[s], []).append(s)
    blocks = block_sort(list(groups.values()))

    while True:
        block_of = {s: b for b, members in enumerate(blocks) for s in members}
        split: list[list[TaggedState]] = []
        changed = False
        for members in blocks:
            sigs: dict[tuple, list[TaggedState]] = {}
            for s in members:
                rates: dict[tuple[str, int], Fraction] = {}
                for label, rate, target in succ[s]:
                    k = (label, block_of[target])
                    rates[k] = rates.get(k, Fraction(0)) + rate
                sig = tuple(sorted(rates.items()))
                sigs.setdefault(sig, []).append(s)
            if len(sigs) > 1:
                changed = True
            split.extend(sigs.values())
        blocks = block_sort(split)
        if not changed:
            return Partition(blocks)


def fluid_bisimulation(net_a: Lfspn, drg_a: Drg, net_b: Lfspn, drg_b: Drg) -> EquivalenceVerdict:
    """Decide fluid bisimulation equivalence of two nets.

    Returns the largest fluid bisimulation (as a partition of the disjoint
    union) when equivalent, otherwise the refined partition separating the
    initial markings.
    """
    partition = refine_partition({"left": (net_a, drg_a), "right": (net_b, drg_b)})
    equivalent = partition.lookup[("left", 0)] == partition.lookup[("right", 0)]
    witness = None
    if not equivalent:
        witness = {
            "initial_class_left": partition.lookup[("left", 0)],
            "initial_class_right": partition.lookup[("right", 0)],
        }
    return EquivalenceVerdict(equivalent, "bisim", witness=witness, partition=partition)


# --- fluid change volumes ----------------------------------------------------

def fluid_change_marking(net: Lfspn, m: Marking) -> Fraction:
    """Average potential fluid change volume SJ(M) * RP(M)."""
    re = sum((transition_rate(net, t, m) for t in enabled(net, m)), Fraction(0))
    if re == 0:
        raise TerminalMarking(f"marking {m} is terminal; its sojourn time is infinite")
    return potential_rate(net, m) / re


def fluid_change_length(net: Lfspn, drg: Drg, n: int) -> Fraction:
    """Expected path sum of SJ*RP over all transition sequences of length n.

    Computed by stepping the embedded chain: the expectation equals
    sum_{k=0..n} (e0 P^k) . c with c_i = SJ(M_i) RP(M_i).
    """
    stats = sojourn_stats(net, drg)
    cost = []
    for i, m in enumerate(drg.states):
        sj = stats.sj[i]
        cost.append(None if sj is None else sj * potential_rate(net, m))
    p = embedded_tpm(net, drg).p
    dist = [Fraction(0)] * len(drg)
    dist[0] = Fraction(1)
    total = Fraction(0)
    for step in range(n + 1):
        for i, w in enumerate(dist):
            if w == 0:
                continue
            if cost[i] is None:
                raise TerminalMarking(
                    f"terminal marking reachable within {step} steps; the path sum is undefined"
                )
            total += w * cost[i]
        if step < n:
            nxt = [Fraction(0)] * len(drg)
            for i, w in enumerate(dist):
                if w == 0:
                    continue
                for j, pij in enumerate(p[i]):
                    if pij != 0:
                        nxt[j] += w * pij
            dist = nxt
    return total

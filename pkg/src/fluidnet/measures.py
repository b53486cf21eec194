"""Steady-state performance indices over the stationary PMF and the fluid
solution: time fractions, token statistics, throughputs, traversal and exit
frequencies, reward probabilities, fluid levels and proportional arc flows.

Discrete indices stay exact whenever the stationary PMF is exact; the hybrid
ones go through the floating fluid solution.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

from .ctmc import move_rate, sojourn_stats
from .errors import DivisionByZero, ParameterMismatch, UnknownKind
from .model import Lfspn, Marking, enabled, format_rational, transition_rate
from .reachability import Drg
from .sfm import SfmSolution, potential_rate

Number = Union[Fraction, float]

DISCRETE_KINDS = (
    "time-fraction", "tokens", "tokens-pmf", "event-prob", "tokens-num",
    "firing-freq", "exit-freq", "reward-prob", "trav-freq", "delay",
)
HYBRID_KINDS = (
    "fluid-level", "fluid-level-above", "fluid-flow",
    "arc-flow-out", "arc-flow-in", "hybrid-reward",
)


@dataclass
class MeasureRequest:
    kind: str
    params: dict = field(default_factory=dict)


@dataclass
class MeasureReport:
    kind: str
    value: Number
    terms: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        value = format_rational(self.value) if isinstance(self.value, Fraction) else self.value
        return {"kind": self.kind, "value": value, "terms": self.terms}


def _state_set(drg: Drg, params: dict, key: str = "markings") -> list[int]:
    if "states" in params:
        states = params["states"]
        if not all(isinstance(i, int) and 0 <= i < len(drg) for i in states):
            raise ParameterMismatch("state indices out of range")
        return sorted(set(states))
    if key not in params:
        raise ParameterMismatch(f"missing parameter {key!r} (or 'states')")
    out = set()
    for vec in params[key]:
        m = tuple(vec)
        if m not in drg.index:
            raise ParameterMismatch(f"marking {list(m)} is not reachable")
        out.add(drg.index[m])
    return sorted(out)


def _one_state(drg: Drg, params: dict, key: str) -> int:
    if key in params and isinstance(params[key], int):
        i = params[key]
        if not 0 <= i < len(drg):
            raise ParameterMismatch(f"state index {i} out of range")
        return i
    if key not in params:
        raise ParameterMismatch(f"missing parameter {key!r}")
    m = tuple(params[key])
    if m not in drg.index:
        raise ParameterMismatch(f"marking {list(m)} is not reachable")
    return drg.index[m]


def _place(net: Lfspn, params: dict) -> int:
    p = params.get("place")
    if p not in net.place_index:
        raise ParameterMismatch(f"unknown discrete place {p!r}")
    return net.place_index[p]


def _transition(net: Lfspn, params: dict):
    name = params.get("transition")
    for t in net.transitions:
        if t.name == name:
            return t
    raise ParameterMismatch(f"unknown transition {name!r}")


def discrete_measures(
    phi: Sequence[Number], drg: Drg, net: Lfspn, request: MeasureRequest
) -> MeasureReport:
    """Indices that depend on the stationary PMF only."""
    kind, params = request.kind, request.params
    terms: list[dict] = []

    if kind in ("time-fraction", "event-prob"):
        states = _state_set(drg, params)
        value = sum((phi[i] for i in states), _zero(phi))
        terms = [{"state": i, "phi": _fmt(phi[i])} for i in states]
    elif kind == "tokens":
        p = _place(net, params)
        k = params.get("k")
        if not isinstance(k, int) or k < 0:
            raise ParameterMismatch("'k' must be a natural number")
        states = [i for i, m in enumerate(drg.states) if m[p] == k]
        value = sum((phi[i] for i in states), _zero(phi))
        terms = [{"state": i, "phi": _fmt(phi[i])} for i in states]
    elif kind == "tokens-pmf":
        p = _place(net, params)
        support = max(m[p] for m in drg.states)
        pmf = []
        for k in range(support + 1):
            pmf.append(sum((phi[i] for i, m in enumerate(drg.states) if m[p] == k), _zero(phi)))
        terms = [{"k": k, "prob": _fmt(v)} for k, v in enumerate(pmf)]
        value = sum(pmf[k] * k for k in range(support + 1))
        return MeasureReport(kind, value, terms)
    elif kind == "tokens-num":
        p = _place(net, params)
        value = sum((phi[i] * m[p] for i, m in enumerate(drg.states) if m[p] >= 1), _zero(phi))
        terms = [{"state": i, "tokens": m[p]} for i, m in enumerate(drg.states) if m[p] >= 1]
    elif kind == "firing-freq":
        t = _transition(net, params)
        value = _zero(phi)
        for i, m in enumerate(drg.states):
            if t in enabled(net, m):
                rate = transition_rate(net, t, m)
                value += phi[i] * rate
                terms.append({"state": i, "rate": format_rational(rate)})
    elif kind == "exit-freq":
        i = _one_state(drg, params, "marking")
        re = sojourn_stats(net, drg).re[i]
        value = phi[i] * re
        terms = [{"state": i, "exit_rate": format_rational(re)}]
    elif kind == "reward-prob":
        rewards = params.get("reward")
        if not isinstance(rewards, (list, tuple)) or len(rewards) != len(drg):
            raise ParameterMismatch("'reward' must list one value per state")
        rvals = [Fraction(str(r)) for r in rewards]
        if any(r < 0 or r > 1 for r in rvals):
            raise ParameterMismatch("reward values must lie in [0, 1]")
        value = sum((phi[i] * rvals[i] for i in range(len(drg))), _zero(phi))
        terms = [{"state": i, "reward": format_rational(rvals[i])} for i in range(len(drg))]
    elif kind == "trav-freq":
        i = _one_state(drg, params, "source")
        j = _one_state(drg, params, "target")
        rm = move_rate(net, drg, i, j)
        value = phi[i] * rm
        terms = [{"source": i, "target": j, "rate": format_rational(rm)}]
    elif kind == "delay":
        try:
            trav = Fraction(str(params["trav_tokens"]))
            rate = Fraction(str(params["rate"]))
        except KeyError as exc:
            raise ParameterMismatch(f"missing parameter {exc.args[0]!r}") from exc
        if rate == 0:
            raise DivisionByZero("the token rate operand is zero")
        value = trav / rate
    elif kind in HYBRID_KINDS:
        raise UnknownKind(f"{kind!r} is a hybrid index; use the hybrid evaluator")
    else:
        raise UnknownKind(f"unknown measure kind {kind!r}")
    return MeasureReport(kind, value, terms)


def _zero(phi: Sequence[Number]) -> Number:
    return Fraction(0) if phi and isinstance(phi[0], Fraction) else 0.0


def _fmt(x: Number):
    return format_rational(x) if isinstance(x, Fraction) else x


def hybrid_measures(
    phi: Sequence[Number],
    ell: Sequence[float],
    sol: Optional[SfmSolution],
    drg: Drg,
    net: Lfspn,
    request: MeasureRequest,
) -> MeasureReport:
    """Indices over the stationary fluid solution (single continuous place)."""
    kind, params = request.kind, request.params
    terms: list[dict] = []

    if kind == "fluid-level":
        value = 1.0 - float(sum(ell))
        terms = [{"state": i, "ell": float(ell[i])} for i in range(len(drg))]
    elif kind == "fluid-level-above":
        v = float(params.get("v", 0))
        if v <= 0:
            raise ParameterMismatch("'v' must be positive")
        big_f, _ = sol.eval(v)
        value = 1.0 - float(big_f.sum())
        terms = [{"state": i, "F": float(big_f[i])} for i in range(len(drg))]
    elif kind == "fluid-flow":
        value = _zero(phi)
        for i, m in enumerate(drg.states):
            rp = potential_rate(net, m)
            value += phi[i] * rp
            terms.append({"state": i, "drift": format_rational(rp)})
    elif kind in ("arc-flow-out", "arc-flow-in"):
        t = _transition(net, params)
        value = _proportional_flow(phi, ell, drg, net, t, outgoing=(kind == "arc-flow-out"), terms=terms)
    elif kind == "hybrid-reward":
        value = _hybrid_reward(ell, sol, drg, params, terms)
    elif kind in DISCRETE_KINDS:
        raise UnknownKind(f"{kind!r} is a discrete index; use the discrete evaluator")
    else:
        raise UnknownKind(f"unknown measure kind {kind!r}")
    return MeasureReport(kind, value, terms)


def boundary_flow_ratio(net: Lfspn, m: Marking, outgoing: bool) -> Fraction:
    """Correction ratio of the proportional flow rate at an empty buffer.

    For an outgoing arc (q,t) the proportional rate scales by total inflow
    over total outflow across the enabled transitions (and conversely). A
    zero denominator is reported, never silently skipped.
    """
    q = net.continuous_places[0]
    idx = net.place_index
    inflow = sum((t.fluid_in_rate(q, m, idx) for t in enabled(net, m)), Fraction(0))
    outflow = sum((t.fluid_out_rate(q, m, idx) for t in enabled(net, m)), Fraction(0))
    num, den = (inflow, outflow) if outgoing else (outflow, inflow)
    if den == 0:
        raise DivisionByZero(
            "the proportional-rate correction needs the total "
            + ("outflow" if outgoing else "inflow")
            + f" in marking {m}, which is zero"
        )
    return num / den


def _proportional_flow(phi, ell, drg, net, t, outgoing: bool, terms: list) -> float:
    q = net.continuous_places[0]
    idx = net.place_index
    value = 0.0
    for i, m in enumerate(drg.states):
        if t not in enabled(net, m):
            continue
        arc_rate = t.fluid_out_rate(q, m, idx) if outgoing else t.fluid_in_rate(q, m, idx)
        if arc_rate == 0:
            continue  # term vanishes; the x=0 ratio is never needed
        ratio = boundary_flow_ratio(net, m, outgoing)
        term = (float(ell[i]) * (float(ratio) - 1.0) + float(phi[i])) * float(arc_rate)
        value += term
        terms.append({"state": i, "arc_rate": format_rational(arc_rate),
                      "boundary_ratio": format_rational(ratio), "term": term})
    return value


def _hybrid_reward(ell, sol: SfmSolution, drg: Drg, params: dict, terms: list) -> float:
    """Prob(r) = sum_i ( ell_i r_i(0) + integral f_i(x) r_i(x) dx ) for
    piecewise-polynomial rewards; the integrals are closed forms against the
    exponential modes."""
    rewards = params.get("reward")
    if not isinstance(rewards, (list, tuple)) or len(rewards) != len(drg):
        raise ParameterMismatch("'reward' must list one piecewise polynomial per state")
    value = 0.0
    for i, pieces in enumerate(rewards):
        if isinstance(pieces, (int, float, str)):
            pieces = [{"coeffs": [pieces]}]
        state_total = 0.0
        r_at_zero = 0.0
        for piece in pieces:
            coeffs = [float(Fraction(str(c))) for c in piece.get("coeffs", [])]
            lo = float(piece.get("from", 0.0))
            hi = piece.get("to")
            hi = None if hi is None else float(hi)
            if lo <= 0.0 and (hi is None or hi > 0.0) and coeffs:
                r_at_zero = coeffs[0]
            for p, c in enumerate(coeffs):
                if c:
                    state_total += c * float(sol.density_moment_integral(p, lo, hi)[i])
        value += float(ell[i]) * r_at_zero + state_total
        terms.append({"state": i, "ell_times_r0": float(ell[i]) * r_at_zero})
    return value

"""Net data model: places, transitions, markings, the JSON format and the
single-step firing semantics.

All rates are exact rationals (`fractions.Fraction`). A rate may depend on
the discrete marking: the file format accepts either a single constant or a
first-match list of (marking-pattern, value) rules. Every fixture shipped
with the package uses constants.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence, Union

from .errors import DimensionMismatch, NetFormatError, NetSyntaxError, NotEnabled

Marking = tuple[int, ...]

_RATIONAL_RE = re.compile(r"^[+-]?\d+(/\d+)?$")


def parse_rational(text: str, path: str = "") -> Fraction:
    """Parse the rational grammar INT | INT "/" INT into a Fraction."""
    if isinstance(text, int):
        return Fraction(text)
    if not isinstance(text, str) or not _RATIONAL_RE.match(text.strip()):
        raise NetFormatError(f"not a rational: {text!r}", path=path)
    return Fraction(text.strip())


def format_rational(value: Fraction) -> str:
    return str(Fraction(value))


@dataclass(frozen=True)
class RateRule:
    """One (marking-pattern, value) rule; pattern None matches any marking."""

    pattern: Optional[tuple[tuple[str, int], ...]]
    value: Fraction

    def matches(self, marking: Marking, place_index: Mapping[str, int]) -> bool:
        if self.pattern is None:
            return True
        return all(marking[place_index[p]] == k for p, k in self.pattern)


RateSpec = Union[Fraction, tuple[RateRule, ...]]


def _eval_rate(spec: RateSpec, marking: Marking, place_index: Mapping[str, int]) -> Fraction:
    if isinstance(spec, Fraction):
        return spec
    for rule in spec:
        if rule.matches(marking, place_index):
            return rule.value
    raise NetFormatError("no rate rule matches the marking (missing catch-all)")


@dataclass(frozen=True)
class Transition:
    """A labeled exponential transition with discrete and continuous arcs.

    ``input_weights``/``output_weights`` map discrete places to arc weights;
    a missing entry means weight 0 (the arc does not exist). ``fluid_out``
    holds the rate of the arc from the continuous place to the transition,
    ``fluid_in`` the rate of the arc from the transition to the place.
    """

    name: str
    label: str
    rate: RateSpec
    input_weights: tuple[tuple[str, int], ...] = ()
    output_weights: tuple[tuple[str, int], ...] = ()
    fluid_in: tuple[tuple[str, RateSpec], ...] = ()
    fluid_out: tuple[tuple[str, RateSpec], ...] = ()

    def rate_in(self, marking: Marking, place_index: Mapping[str, int]) -> Fraction:
        return _eval_rate(self.rate, marking, place_index)

    def fluid_in_rate(self, cplace: str, marking: Marking, place_index: Mapping[str, int]) -> Fraction:
        for q, spec in self.fluid_in:
            if q == cplace:
                return _eval_rate(spec, marking, place_index)
        return Fraction(0)

    def fluid_out_rate(self, cplace: str, marking: Marking, place_index: Mapping[str, int]) -> Fraction:
        for q, spec in self.fluid_out:
            if q == cplace:
                return _eval_rate(spec, marking, place_index)
        return Fraction(0)


@dataclass(frozen=True)
class Lfspn:
    """An immutable labeled fluid stochastic Petri net.

    The continuous marking is implicitly all-zero initially; standard
    analyses require exactly one continuous place.
    """

    discrete_places: tuple[str, ...]
    continuous_places: tuple[str, ...]
    transitions: tuple[Transition, ...]
    initial_marking: Marking
    place_index: Mapping[str, int] = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "place_index", {p: i for i, p in enumerate(self.discrete_places)})

    def transition(self, name: str) -> Transition:
        for t in self.transitions:
            if t.name == name:
                return t
        raise KeyError(name)

    @property
    def actions(self) -> tuple[str, ...]:
        seen: list[str] = []
        for t in self.transitions:
            if t.label not in seen:
                seen.append(t.label)
        return tuple(seen)


@dataclass
class NetValidationReport:
    errors: list[tuple[str, str]] = field(default_factory=list)
    warnings: list[tuple[str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "errors": [{"code": c, "message": m} for c, m in self.errors],
            "warnings": [{"code": c, "message": m} for c, m in self.warnings],
        }


def enabled(net: Lfspn, m: Marking) -> list[Transition]:
    """Transitions enabled in m: every input weight is covered by tokens."""
    if len(m) != len(net.discrete_places):
        raise DimensionMismatch(f"marking has {len(m)} entries, net has {len(net.discrete_places)} discrete places")
    idx = net.place_index
    return [t for t in net.transitions if all(m[idx[p]] >= w for p, w in t.input_weights)]


def fire(net: Lfspn, m: Marking, t: Union[Transition, str]) -> Marking:
    """Fire t in m: tokens move by output minus input weights."""
    if isinstance(t, str):
        t = net.transition(t)
    idx = net.place_index
    if any(m[idx[p]] < w for p, w in t.input_weights):
        raise NotEnabled(f"transition {t.name} is not enabled in {m}")
    out = list(m)
    for p, w in t.input_weights:
        out[idx[p]] -= w
    for p, w in t.output_weights:
        out[idx[p]] += w
    return tuple(out)


def transition_rate(net: Lfspn, t: Transition, m: Marking) -> Fraction:
    return t.rate_in(m, net.place_index)


# --- JSON format -----------------------------------------------------------

def _parse_rate_spec(doc, path: str) -> RateSpec:
    if isinstance(doc, (str, int)):
        return parse_rational(doc, path)
    if isinstance(doc, list):
        if not doc:
            raise NetFormatError("empty rate rule list", path=path)
        rules = []
        for i, item in enumerate(doc):
            here = f"{path}[{i}]"
            if not isinstance(item, dict) or "value" not in item:
                raise NetFormatError("rate rule must be an object with a 'value'", path=here)
            pattern = item.get("marking")
            if pattern is not None:
                if not isinstance(pattern, dict):
                    raise NetFormatError("'marking' must map places to token counts", path=here)
                pattern = tuple(sorted((str(p), int(k)) for p, k in pattern.items()))
            rules.append(RateRule(pattern, parse_rational(item["value"], here)))
        if rules[-1].pattern is not None:
            raise NetFormatError("rate rule list must end with a catch-all rule (no 'marking')", path=path)
        return tuple(rules)
    raise NetFormatError("rate must be a rational string or a rule list", path=path)


def _weights(doc, places: Sequence[str], path: str) -> tuple[tuple[str, int], ...]:
    if doc is None:
        return ()
    if not isinstance(doc, dict):
        raise NetFormatError("arc weights must be an object", path=path)
    out = []
    for p, w in doc.items():
        if p not in places:
            raise NetFormatError(f"unknown discrete place {p!r}", path=f"{path}.{p}")
        if not isinstance(w, int) or isinstance(w, bool) or w < 0:
            raise NetFormatError("arc weight must be a natural number", path=f"{path}.{p}")
        if w > 0:
            out.append((p, w))
    return tuple(out)


def _fluid_arcs(doc, cplaces: Sequence[str], path: str) -> tuple[tuple[str, RateSpec], ...]:
    if doc is None:
        return ()
    if not isinstance(doc, dict):
        raise NetFormatError("fluid arcs must be an object", path=path)
    out = []
    for q, spec in doc.items():
        if q not in cplaces:
            raise NetFormatError(f"unknown continuous place {q!r}", path=f"{path}.{q}")
        out.append((q, _parse_rate_spec(spec, f"{path}.{q}")))
    return tuple(out)


def net_from_dict(doc: dict) -> Lfspn:
    if not isinstance(doc, dict):
        raise NetFormatError("net document must be a JSON object", path="")
    for key in ("discrete_places", "continuous_places", "initial_marking", "transitions"):
        if key not in doc:
            raise NetFormatError(f"missing key {key!r}", path=key)
    dp = doc["discrete_places"]
    cp = doc["continuous_places"]
    if not isinstance(dp, list) or not all(isinstance(p, str) for p in dp):
        raise NetFormatError("discrete_places must be a list of strings", path="discrete_places")
    if not isinstance(cp, list) or not all(isinstance(q, str) for q in cp):
        raise NetFormatError("continuous_places must be a list of strings", path="continuous_places")
    init = doc["initial_marking"]
    if (not isinstance(init, list) or len(init) != len(dp)
            or not all(isinstance(k, int) and not isinstance(k, bool) and k >= 0 for k in init)):
        raise NetFormatError("initial_marking must list one natural number per discrete place",
                             path="initial_marking")
    if not isinstance(doc["transitions"], list):
        raise NetFormatError("transitions must be a list", path="transitions")
    transitions = []
    for i, tdoc in enumerate(doc["transitions"]):
        path = f"transitions[{i}]"
        if not isinstance(tdoc, dict):
            raise NetFormatError("transition must be an object", path=path)
        for key in ("name", "label", "rate"):
            if key not in tdoc:
                raise NetFormatError(f"missing key {key!r}", path=f"{path}.{key}")
        transitions.append(Transition(
            name=str(tdoc["name"]),
            label=str(tdoc["label"]),
            rate=_parse_rate_spec(tdoc["rate"], f"{path}.rate"),
            input_weights=_weights(tdoc.get("in"), dp, f"{path}.in"),
            output_weights=_weights(tdoc.get("out"), dp, f"{path}.out"),
            fluid_in=_fluid_arcs(tdoc.get("fluid_in"), cp, f"{path}.fluid_in"),
            fluid_out=_fluid_arcs(tdoc.get("fluid_out"), cp, f"{path}.fluid_out"),
        ))
    return Lfspn(tuple(dp), tuple(cp), tuple(transitions), tuple(init))


def parse_net(text: str) -> Lfspn:
    """Parse a UTF-8 net document; rationals are parsed exactly."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise NetSyntaxError(f"invalid JSON: {exc.msg}", path=f"line {exc.lineno} column {exc.colno}") from exc
    return net_from_dict(doc)


def _rate_spec_to_doc(spec: RateSpec):
    if isinstance(spec, Fraction):
        return format_rational(spec)
    return [
        {"value": format_rational(r.value)} if r.pattern is None
        else {"marking": dict(r.pattern), "value": format_rational(r.value)}
        for r in spec
    ]


def net_to_dict(net: Lfspn) -> dict:
    return {
        "discrete_places": list(net.discrete_places),
        "continuous_places": list(net.continuous_places),
        "initial_marking": list(net.initial_marking),
        "transitions": [
            {
                "name": t.name,
                "label": t.label,
                "rate": _rate_spec_to_doc(t.rate),
                "in": {p: w for p, w in t.input_weights},
                "out": {p: w for p, w in t.output_weights},
                "fluid_in": {q: _rate_spec_to_doc(s) for q, s in t.fluid_in},
                "fluid_out": {q: _rate_spec_to_doc(s) for q, s in t.fluid_out},
            }
            for t in net.transitions
        ],
    }


def serialize_net(net: Lfspn) -> str:
    return json.dumps(net_to_dict(net), indent=2)


# --- validation ------------------------------------------------------------

def _spec_values(spec: RateSpec) -> Iterable[Fraction]:
    if isinstance(spec, Fraction):
        yield spec
    else:
        for rule in spec:
            yield rule.value


def validate_net(net: Lfspn) -> NetValidationReport:
    """Check the structural invariants; violations are reported, not raised."""
    report = NetValidationReport()
    names = list(net.discrete_places) + list(net.continuous_places) + [t.name for t in net.transitions]
    if len(set(names)) != len(names):
        report.errors.append(("DUPLICATE_NAME", "places and transitions must have pairwise distinct names"))
    if set(net.discrete_places) & set(net.continuous_places):
        report.errors.append(("PLACE_OVERLAP", "a place cannot be both discrete and continuous"))
    if not names:
        report.errors.append(("EMPTY_NET", "places and transitions are all empty"))
    if len(net.initial_marking) != len(net.discrete_places):
        report.errors.append(("MARKING_LENGTH", "initial marking length differs from the discrete place count"))
    for t in net.transitions:
        if any(v <= 0 for v in _spec_values(t.rate)):
            report.errors.append(("RATE_NOT_POSITIVE", f"transition {t.name} has a non-positive rate"))
        for q, spec in t.fluid_in + t.fluid_out:
            if any(v < 0 for v in _spec_values(spec)):
                report.errors.append(("FLUID_RATE_NEGATIVE", f"fluid arc at {t.name}/{q} has a negative rate"))
    if len(net.continuous_places) != 1:
        report.warnings.append((
            "MULTI_CONTINUOUS",
            f"net has {len(net.continuous_places)} continuous places; "
            "the standard fluid analyses and equivalences require exactly one",
        ))
    return report

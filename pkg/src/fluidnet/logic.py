"""The two fluid modal logics.

The trace logic has only truth and action diamonds; its interpretation takes
a sojourn-time sequence and a drift sequence and yields a probability. The
branching logic adds negation, conjunction, action refusal, a drift test and
rate-bounded diamonds; satisfaction is boolean.

Grammar (flt):  T | <a> formula
Grammar (flb):  T | !f | f & f | f | f | nabla(a) | rate(r) | <a:lambda> f
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

from .ctmc import MaybeInf, sojourn_stats
from .errors import FormulaSyntaxError, MultiContinuous
from .model import Lfspn, enabled, fire, transition_rate
from .reachability import Drg
from .sfm import potential_rate


# --- ASTs --------------------------------------------------------------------

@dataclass(frozen=True)
class FltTop:
    def __str__(self) -> str:
        return "T"


@dataclass(frozen=True)
class FltDiamond:
    action: str
    sub: "FltFormula"

    def __str__(self) -> str:
        return f"<{self.action}>{self.sub}"


FltFormula = Union[FltTop, FltDiamond]


@dataclass(frozen=True)
class FlbTop:
    def __str__(self) -> str:
        return "T"


@dataclass(frozen=True)
class FlbNot:
    sub: "FlbFormula"

    def __str__(self) -> str:
        return f"!({self.sub})"


@dataclass(frozen=True)
class FlbAnd:
    left: "FlbFormula"
    right: "FlbFormula"

    def __str__(self) -> str:
        return f"({self.left} & {self.right})"


@dataclass(frozen=True)
class FlbNabla:
    action: str

    def __str__(self) -> str:
        return f"nabla({self.action})"


@dataclass(frozen=True)
class FlbFluidRate:
    rate: Fraction

    def __str__(self) -> str:
        return f"rate({self.rate})"


@dataclass(frozen=True)
class FlbDiamond:
    action: str
    bound: Fraction
    sub: "FlbFormula"

    def __str__(self) -> str:
        return f"<{self.action}:{self.bound}>({self.sub})"


FlbFormula = Union[FlbTop, FlbNot, FlbAnd, FlbNabla, FlbFluidRate, FlbDiamond]


def flt_depth(formula: FltFormula) -> int:
    depth = 0
    while isinstance(formula, FltDiamond):
        depth += 1
        formula = formula.sub
    return depth


def flt_action_sequence(formula: FltFormula) -> tuple[str, ...]:
    actions = []
    while isinstance(formula, FltDiamond):
        actions.append(formula.action)
        formula = formula.sub
    return tuple(actions)


# --- parser ------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<ident>[A-Za-z_][A-Za-z0-9_]*)|(?P<rat>[+-]?\d+(?:/\d+)?)|(?P<sym>[<>():&|!]))"
)


class _Tokens:
    def __init__(self, text: str):
        self.text = text
        self.items: list[tuple[str, str, int]] = []
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if m is None or m.end() == pos:
                if text[pos:].strip():
                    raise FormulaSyntaxError(f"unexpected character {text[pos]!r}", position=pos)
                break
            kind = next(k for k in ("ident", "rat", "sym") if m.group(k) is not None)
            self.items.append((kind, m.group(kind), m.start(kind)))
            pos = m.end()
        self.cursor = 0

    def peek(self) -> Optional[tuple[str, str, int]]:
        return self.items[self.cursor] if self.cursor < len(self.items) else None

    def next(self) -> tuple[str, str, int]:
        tok = self.peek()
        if tok is None:
            raise FormulaSyntaxError("unexpected end of formula", position=len(self.text))
        self.cursor += 1
        return tok

    def expect(self, value: str) -> tuple[str, str, int]:
        tok = self.next()
        if tok[1] != value:
            raise FormulaSyntaxError(f"expected {value!r}, found {tok[1]!r}", position=tok[2])
        return tok


def _parse_flt(tokens: _Tokens) -> FltFormula:
    kind, value, pos = tokens.next()
    if value == "T":
        return FltTop()
    if value == "<":
        kind, action, pos = tokens.next()
        if kind != "ident":
            raise FormulaSyntaxError("expected an action name", position=pos)
        tokens.expect(">")
        return FltDiamond(action, _parse_flt(tokens))
    raise FormulaSyntaxError(f"expected 'T' or '<action>', found {value!r}", position=pos)


def _parse_flb_or(tokens: _Tokens) -> FlbFormula:
    left = _parse_flb_and(tokens)
    while tokens.peek() is not None and tokens.peek()[1] == "|":
        tokens.next()
        right = _parse_flb_and(tokens)
        # disjunction is derived: a | b  ==  !(!a & !b)
        left = FlbNot(FlbAnd(FlbNot(left), FlbNot(right)))
    return left


def _parse_flb_and(tokens: _Tokens) -> FlbFormula:
    left = _parse_flb_unary(tokens)
    while tokens.peek() is not None and tokens.peek()[1] == "&":
        tokens.next()
        left = FlbAnd(left, _parse_flb_unary(tokens))
    return left


def _parse_flb_unary(tokens: _Tokens) -> FlbFormula:
    tok = tokens.peek()
    if tok is None:
        raise FormulaSyntaxError("unexpected end of formula", position=-1)
    kind, value, pos = tok
    if value == "!":
        tokens.next()
        return FlbNot(_parse_flb_unary(tokens))
    if value == "<":
        tokens.next()
        kind, action, apos = tokens.next()
        if kind != "ident":
            raise FormulaSyntaxError("expected an action name", position=apos)
        tokens.expect(":")
        kind, bound, bpos = tokens.next()
        if kind != "rat":
            raise FormulaSyntaxError("expected a rational rate bound", position=bpos)
        bound_value = Fraction(bound)
        if bound_value <= 0:
            raise FormulaSyntaxError("the diamond rate bound must be positive", position=bpos)
        tokens.expect(">")
        return FlbDiamond(action, bound_value, _parse_flb_unary(tokens))
    return _parse_flb_atom(tokens)


def _parse_flb_atom(tokens: _Tokens) -> FlbFormula:
    kind, value, pos = tokens.next()
    if value == "T":
        return FlbTop()
    if value == "(":
        sub = _parse_flb_or(tokens)
        tokens.expect(")")
        return sub
    if value == "nabla":
        tokens.expect("(")
        kind, action, apos = tokens.next()
        if kind != "ident":
            raise FormulaSyntaxError("expected an action name", position=apos)
        tokens.expect(")")
        return FlbNabla(action)
    if value == "rate":
        tokens.expect("(")
        kind, rate, rpos = tokens.next()
        if kind != "rat":
            raise FormulaSyntaxError("expected a rational drift value", position=rpos)
        tokens.expect(")")
        return FlbFluidRate(Fraction(rate))
    raise FormulaSyntaxError(f"unexpected token {value!r}", position=pos)


def parse_formula(text: str, dialect: str) -> Union[FltFormula, FlbFormula]:
    """Parse a formula of the requested dialect ("flt" or "flb")."""
    tokens = _Tokens(text)
    if dialect == "flt":
        formula = _parse_flt(tokens)
    elif dialect == "flb":
        formula = _parse_flb_or(tokens)
    else:
        raise ValueError(f"unknown dialect {dialect!r}")
    trailing = tokens.peek()
    if trailing is not None:
        raise FormulaSyntaxError(f"trailing input {trailing[1]!r}", position=trailing[2])
    return formula


# --- evaluation --------------------------------------------------------------

def _require_single_cplace(net: Lfspn) -> None:
    if len(net.continuous_places) != 1:
        raise MultiContinuous("the fluid logics are defined for one continuous place")


def selective_pt(
    net: Lfspn,
    drg: Drg,
    state: int,
    sigma: Sequence[str],
    varsigma: Sequence[Union[Fraction, None]],
    varrho: Sequence[Fraction],
) -> Fraction:
    """Cumulative probability of the (sigma, varsigma, varrho)-selected
    transition sequences starting in the given marking, by the recursion
    PT(M, a.sig, s.vs, r.vr) = sum over a-successors of PT(t, M) PT(M~, ...).
    """
    _require_single_cplace(net)
    stats = sojourn_stats(net, drg)
    rp = [potential_rate(net, m) for m in drg.states]
    return _selective_pt(net, drg, stats, rp, state, tuple(sigma), tuple(varsigma), tuple(varrho))


def _selective_pt(net, drg, stats, rp, state, sigma, varsigma, varrho) -> Fraction:
    if not sigma:
        ok = varsigma == (stats.sj[state],) and varrho == (rp[state],)
        return Fraction(1 if ok else 0)
    if not varsigma or not varrho:
        return Fraction(0)
    if varsigma[0] != stats.sj[state] or varrho[0] != rp[state]:
        return Fraction(0)
    m = drg.states[state]
    re = stats.re[state]
    total = Fraction(0)
    for t in enabled(net, m):
        if t.label != sigma[0]:
            continue
        target = drg.index[fire(net, m, t)]
        pt = transition_rate(net, t, m) / re
        total += pt * _selective_pt(net, drg, stats, rp, target, sigma[1:], varsigma[1:], varrho[1:])
    return total


def interpret_flt(
    net: Lfspn,
    drg: Drg,
    formula: FltFormula,
    varsigma: Sequence[Union[Fraction, None]],
    varrho: Sequence[Fraction],
    state: int = 0,
) -> Fraction:
    """Probability-valued interpretation of a trace-logic formula at a
    marking (default: the initial one)."""
    _require_single_cplace(net)
    stats = sojourn_stats(net, drg)
    rp = [potential_rate(net, m) for m in drg.states]
    return _interpret_flt(net, drg, stats, rp, formula, tuple(varsigma), tuple(varrho), state)


def _interpret_flt(net, drg, stats, rp, formula, varsigma, varrho, state) -> Fraction:
    if isinstance(formula, FltTop):
        ok = varsigma == (stats.sj[state],) and varrho == (rp[state],)
        return Fraction(1 if ok else 0)
    if not varsigma or not varrho:
        return Fraction(0)
    if varsigma[0] != stats.sj[state] or varrho[0] != rp[state]:
        return Fraction(0)
    m = drg.states[state]
    re = stats.re[state]
    total = Fraction(0)
    for t in enabled(net, m):
        if t.label != formula.action:
            continue
        target = drg.index[fire(net, m, t)]
        pt = transition_rate(net, t, m) / re
        total += pt * _interpret_flt(net, drg, stats, rp, formula.sub, varsigma[1:], varrho[1:], target)
    return total


def satisfies_flb(net: Lfspn, drg: Drg, state: int, formula: FlbFormula) -> bool:
    """Boolean satisfaction of a branching-logic formula at a marking.

    The existential set in a rate-bounded diamond is resolved by taking the
    maximal set of successors satisfying the body: the rate into a set of
    states is monotone under set inclusion, so the maximal set witnesses the
    existential whenever any set does.
    """
    _require_single_cplace(net)
    rp = [potential_rate(net, m) for m in drg.states]
    return _satisfies(net, drg, rp, state, formula)


def _satisfies(net, drg, rp, state, formula) -> bool:
    if isinstance(formula, FlbTop):
        return True
    if isinstance(formula, FlbNot):
        return not _satisfies(net, drg, rp, state, formula.sub)
    if isinstance(formula, FlbAnd):
        return _satisfies(net, drg, rp, state, formula.left) and _satisfies(net, drg, rp, state, formula.right)
    if isinstance(formula, FlbNabla):
        m = drg.states[state]
        return not any(t.label == formula.action for t in enabled(net, m))
    if isinstance(formula, FlbFluidRate):
        return rp[state] == formula.rate
    if isinstance(formula, FlbDiamond):
        m = drg.states[state]
        mu = Fraction(0)
        for t in enabled(net, m):
            if t.label != formula.action:
                continue
            target = drg.index[fire(net, m, t)]
            if _satisfies(net, drg, rp, target, formula.sub):
                mu += transition_rate(net, t, m)
        return mu >= formula.bound
    raise TypeError(f"not an flb formula: {formula!r}")


def image_sets(net: Lfspn, drg: Drg) -> dict[tuple[int, str], frozenset[int]]:
    """Per (marking, action) successor sets; finite for every finite
    reachability graph. Kept explicit as the image-finiteness guard the
    characterization results assume."""
    out: dict[tuple[int, str], frozenset[int]] = {}
    for i, m in enumerate(drg.states):
        for a in net.actions:
            out[(i, a)] = frozenset(
                drg.index[fire(net, m, t)] for t in enabled(net, m) if t.label == a
            )
    return out


def enumerate_flb(
    actions: Sequence[str],
    bounds: Sequence[Fraction],
    drifts: Sequence[Fraction],
    depth: int,
    per_level: int = 150,
) -> list[FlbFormula]:
    """Deterministic enumeration of branching-logic formulas up to a nesting
    depth over the given action/bound/drift alphabets.

    Each nesting level is capped at ``per_level`` formulas (deterministic
    prefix), so every requested depth is represented. Only realized constants
    can distinguish finite models, so callers pass the realized per-action
    rates and drift values.
    """
    level: list[FlbFormula] = [FlbTop()]
    level += [FlbNabla(a) for a in actions]
    level += [FlbFluidRate(r) for r in drifts]
    level = level[:per_level]
    out: list[FlbFormula] = list(level)
    for _ in range(depth):
        nxt: list[FlbFormula] = []
        for f in level:
            nxt.append(FlbNot(f))
            for a in actions:
                for lam in bounds:
                    nxt.append(FlbDiamond(a, lam, f))
        for i, f in enumerate(level):
            for g in level[i:]:
                nxt.append(FlbAnd(f, g))
        level = nxt[:per_level]
        out.extend(level)
    return out

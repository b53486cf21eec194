"""The underlying CTMC: sojourn statistics, generator and embedded chain,
stationary and transient probability mass.

Everything row-oriented, following the convention phi Q = 0 for row vectors.
The stationary solve is exact (Fraction Gaussian elimination) up to a size
threshold, dense floating LU with iterative refinement beyond it. Transient
analysis uses uniformization with a Poisson tail cut at 1e-12.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from .errors import NotErgodic, NumericFailure
from .model import Lfspn, enabled, fire, transition_rate
from .reachability import Drg

EXACT_SOLVE_THRESHOLD = 64

Rational = Fraction
# Sojourn entries are None for terminal markings (infinite sojourn).
MaybeInf = Optional[Fraction]


@dataclass(frozen=True)
class Ctmc:
    """Transition rate matrix (infinitesimal generator), exact rationals."""

    q: tuple[tuple[Fraction, ...], ...]

    def __len__(self) -> int:
        return len(self.q)

    def as_numpy(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.q], dtype=float)


@dataclass(frozen=True)
class Edtmc:
    """One-step transition probability matrix of the embedded jump chain."""

    p: tuple[tuple[Fraction, ...], ...]

    def __len__(self) -> int:
        return len(self.p)

    def as_numpy(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.p], dtype=float)


@dataclass(frozen=True)
class SojournStats:
    """Exit rates, mean sojourn times and sojourn variances per state.

    Terminal states have exit rate 0 and infinite mean/variance (None).
    """

    re: tuple[Fraction, ...]
    sj: tuple[MaybeInf, ...]
    var: tuple[MaybeInf, ...]


def exit_rate(net: Lfspn, drg: Drg, i: int) -> Fraction:
    """Sum of the rates of the transitions enabled in state i."""
    m = drg.states[i]
    return sum((transition_rate(net, t, m) for t in enabled(net, m)), Fraction(0))


def sojourn_stats(net: Lfspn, drg: Drg) -> SojournStats:
    re = tuple(exit_rate(net, drg, i) for i in range(len(drg)))
    sj = tuple(1 / r if r > 0 else None for r in re)
    var = tuple(1 / (r * r) if r > 0 else None for r in re)
    return SojournStats(re, sj, var)


def move_rate(net: Lfspn, drg: Drg, i: int, j: int) -> Fraction:
    """Total rate of moving from state i to state j by any transition."""
    m = drg.states[i]
    target = drg.states[j]
    total = Fraction(0)
    for t in enabled(net, m):
        if fire(net, m, t) == target:
            total += transition_rate(net, t, m)
    return total


def move_rate_by_action(net: Lfspn, drg: Drg, i: int, action: str, targets: Sequence[int]) -> Fraction:
    """Overall rate from state i into the state set by transitions labeled with the action."""
    m = drg.states[i]
    wanted = {drg.states[j] for j in targets}
    total = Fraction(0)
    for t in enabled(net, m):
        if t.label == action and fire(net, m, t) in wanted:
            total += transition_rate(net, t, m)
    return total


def transition_rate_matrix(net: Lfspn, drg: Drg) -> Ctmc:
    n = len(drg)
    q = [[Fraction(0)] * n for _ in range(n)]
    for e in drg.edges:
        if e.source != e.target:
            q[e.source][e.target] += e.rate
            q[e.source][e.source] -= e.rate
    return Ctmc(tuple(tuple(row) for row in q))


def embedded_tpm(net: Lfspn, drg: Drg) -> Edtmc:
    """Jump-chain probabilities; rows of terminal states are all zero.

    Self-loop firings stay on the diagonal (they count as jumps), so every
    non-terminal row sums to exactly 1.
    """
    n = len(drg)
    stats = sojourn_stats(net, drg)
    p = [[Fraction(0)] * n for _ in range(n)]
    for e in drg.edges:
        p[e.source][e.target] += e.rate / stats.re[e.source]
    return Edtmc(tuple(tuple(row) for row in p))


# --- stationary solution ----------------------------------------------------

def _bottom_scc_count(q: Sequence[Sequence[Fraction]]) -> int:
    n = len(q)
    succ = [[j for j in range(n) if j != i and q[i][j] != 0] for i in range(n)]
    # iterative Tarjan
    index = [0] * n
    low = [0] * n
    on_stack = [False] * n
    visited = [False] * n
    comp = [-1] * n
    stack: list[int] = []
    counter = 1
    ncomp = 0
    for root in range(n):
        if visited[root]:
            continue
        work = [(root, iter(succ[root]))]
        visited[root] = True
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, it = work[-1]
            advanced = False
            for w_ in it:
                if not visited[w_]:
                    visited[w_] = True
                    index[w_] = low[w_] = counter
                    counter += 1
                    stack.append(w_)
                    on_stack[w_] = True
                    work.append((w_, iter(succ[w_])))
                    advanced = True
                    break
                elif on_stack[w_]:
                    low[v] = min(low[v], index[w_])
            if advanced:
                continue
            work.pop()
            if work:
                low[work[-1][0]] = min(low[work[-1][0]], low[v])
            if low[v] == index[v]:
                while True:
                    w_ = stack.pop()
                    on_stack[w_] = False
                    comp[w_] = ncomp
                    if w_ == v:
                        break
                ncomp += 1
    bottom = set(range(ncomp))
    for i in range(n):
        for j in succ[i]:
            if comp[i] != comp[j]:
                bottom.discard(comp[i])
    return len(bottom)


def _solve_exact(q: Sequence[Sequence[Fraction]]) -> list[Fraction]:
    # Row-reduce the n+1 consistent equations (columns of Q, normalization).
    n = len(q)
    rows = [[q[j][i] for j in range(n)] + [Fraction(0)] for i in range(n)]
    rows.append([Fraction(1)] * n + [Fraction(1)])
    pivot_row = 0
    pivots = []
    for col in range(n):
        sel = next((r for r in range(pivot_row, len(rows)) if rows[r][col] != 0), None)
        if sel is None:
            continue
        rows[pivot_row], rows[sel] = rows[sel], rows[pivot_row]
        pv = rows[pivot_row][col]
        rows[pivot_row] = [x / pv for x in rows[pivot_row]]
        for r in range(len(rows)):
            if r != pivot_row and rows[r][col] != 0:
                f = rows[r][col]
                rows[r] = [x - f * y for x, y in zip(rows[r], rows[pivot_row])]
        pivots.append(col)
        pivot_row += 1
    if pivot_row < n:
        raise NotErgodic("stationary equations are rank-deficient (no unique steady state)")
    phi = [Fraction(0)] * n
    for r, col in enumerate(pivots):
        phi[col] = rows[r][n]
    return phi


def _solve_float(qf: np.ndarray) -> np.ndarray:
    n = qf.shape[0]
    a = qf.T.copy()
    a[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    try:
        phi = np.linalg.solve(a, b)
        # one step of iterative refinement
        resid = b - a @ phi
        phi = phi + np.linalg.solve(a, resid)
    except np.linalg.LinAlgError as exc:
        raise NumericFailure(f"stationary solve failed: {exc}") from exc
    return phi


def steady_state(ctmc: Ctmc, exact_threshold: int = EXACT_SOLVE_THRESHOLD) -> list[Union[Fraction, float]]:
    """Unique solution of phi Q = 0, sum(phi) = 1.

    Requires a single recurrent class; transient states (if any) get
    probability zero. Exact rationals for small chains.
    """
    n = len(ctmc)
    if _bottom_scc_count(ctmc.q) != 1:
        raise NotErgodic("the chain has multiple bottom strongly-connected components")
    if n <= exact_threshold:
        phi = _solve_exact(ctmc.q)
        if any(p < 0 for p in phi):
            raise NumericFailure("exact stationary solution has a negative entry")
        return phi
    return list(_solve_float(ctmc.as_numpy()))


# --- transient solution -----------------------------------------------------

POISSON_TAIL = 1e-12


def _poisson_weights(mu: float) -> np.ndarray:
    """Poisson(mu) pmf from 0 up to a truncation point with tail mass <= 1e-12."""
    if mu <= 0:
        return np.array([1.0])
    k_hi = int(math.ceil(mu + 10.0 * math.sqrt(mu) + 40.0))
    ks = np.arange(k_hi + 1)
    logw = ks * math.log(mu) - mu - np.array([math.lgamma(k + 1) for k in ks])
    w = np.exp(logw)
    cum = np.cumsum(w)
    cut = int(np.searchsorted(cum, 1.0 - POISSON_TAIL)) + 1
    return w[:cut]


def transient_pmf(ctmc: Ctmc, delta: float, initial: Optional[Sequence[float]] = None) -> np.ndarray:
    """phi(delta) = phi(0) e^(Q delta) via uniformization.

    The default initial distribution is the indicator of the initial state
    (index 0). Absolute error is bounded by the Poisson tail mass.
    """
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    n = len(ctmc)
    if initial is None:
        pi = np.zeros(n)
        pi[0] = 1.0
    else:
        pi = np.asarray([float(x) for x in initial], dtype=float)
        if pi.shape != (n,):
            raise ValueError("initial distribution has the wrong length")
    qf = ctmc.as_numpy()
    lam = max(-qf[i, i] for i in range(n)) if n else 0.0
    if lam == 0.0 or delta == 0.0:
        return pi
    p_unif = np.eye(n) + qf / lam
    weights = _poisson_weights(lam * delta)
    acc = weights[0] * pi
    vec = pi
    for w in weights[1:]:
        vec = vec @ p_unif
        acc = acc + w * vec
    # compensate the truncated tail so the result stays normalized
    return acc / weights.sum()

"""Quotients by the largest fluid autobisimulation: class-level reachability
graph and CTMC, collector/distributor matrices, and the algebraic identity
checks tying the quotient objects to the originals.

All matrix identities are verified in exact rational arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .ctmc import Ctmc, MaybeInf, move_rate_by_action, sojourn_stats, steady_state, transition_rate_matrix
from .equivalence import Partition, refine_partition
from .errors import PartitionNotStable
from .model import Lfspn, format_rational
from .reachability import Drg
from .sfm import FluidRateMatrix, SfmSolution, fluid_rate_matrix

Matrix = list[list[Fraction]]

ISOMORPHISM_STATE_LIMIT = 12


def largest_autobisimulation(net: Lfspn, drg: Drg) -> Partition:
    """Coarsest fluid autobisimulation partition of one net's state space."""
    return refine_partition({"n": (net, drg)})


def partition_classes(partition: Partition, tag: str = "n") -> list[list[int]]:
    return partition.classes_for(tag)


def collector_distributor(classes: Sequence[Sequence[int]], n: int) -> tuple[Matrix, Matrix]:
    """Collector V (n x l, 0/1, one 1 per row) and its row-normalized
    transpose W (l x n); W V = I holds exactly.
    """
    l = len(classes)
    v: Matrix = [[Fraction(0)] * l for _ in range(n)]
    for r, members in enumerate(classes):
        for i in members:
            v[i][r] = Fraction(1)
    w: Matrix = [[Fraction(0)] * n for _ in range(l)]
    for r, members in enumerate(classes):
        share = Fraction(1, len(members))
        for i in members:
            w[r][i] = share
    return v, w


def mat_mul(a: Matrix, b: Matrix) -> Matrix:
    return [[sum((x * y for x, y in zip(row, col)), Fraction(0)) for col in zip(*b)] for row in a]


@dataclass(frozen=True)
class QuotientModel:
    classes: tuple[tuple[int, ...], ...]
    edges: tuple[tuple[int, str, Fraction, int], ...]  # (class, action, rate, class)
    q_q: Ctmc
    r_q: FluidRateMatrix
    sj_q: tuple[MaybeInf, ...]
    var_q: tuple[MaybeInf, ...]
    initial_class: int
    v: tuple[tuple[Fraction, ...], ...]
    w: tuple[tuple[Fraction, ...], ...]

    def to_dict(self) -> dict:
        def fmt(x):
            return format_rational(x) if x is not None else "inf"
        return {
            "classes": [list(c) for c in self.classes],
            "initial_class": self.initial_class,
            "edges": [[s, a, format_rational(r), t] for s, a, r, t in self.edges],
            "Q": [[format_rational(x) for x in row] for row in self.q_q.q],
            "R": [format_rational(x) for x in self.r_q.diag],
            "SJ": [fmt(x) for x in self.sj_q],
            "VAR": [fmt(x) for x in self.var_q],
            "V": [[format_rational(x) for x in row] for row in self.v],
            "W": [[format_rational(x) for x in row] for row in self.w],
        }


def quotient_model(net: Lfspn, drg: Drg, partition: Partition, tag: str = "n") -> QuotientModel:
    """Class-level DRG/CTMC with per-action rates taken from representatives.

    Every member of a class is checked against its class signature; a
    disagreement raises PARTITION_NOT_STABLE.
    """
    classes = partition.classes_for(tag)
    n = len(drg)
    covered = sorted(i for c in classes for i in c)
    if covered != list(range(n)):
        raise PartitionNotStable("partition does not cover the state space exactly")
    actions = net.actions
    edges: list[tuple[int, str, Fraction, int]] = []
    for r, members in enumerate(classes):
        for s, targets in enumerate(classes):
            for a in actions:
                rates = {move_rate_by_action(net, drg, i, a, targets) for i in members}
                if len(rates) > 1:
                    raise PartitionNotStable(
                        f"members of class {r} disagree on the rate of action {a!r} into class {s}"
                    )
                rate = rates.pop()
                if rate != 0:
                    edges.append((r, a, rate, s))

    l = len(classes)
    q = [[Fraction(0)] * l for _ in range(l)]
    for r, _, rate, s in edges:
        if r != s:
            q[r][s] += rate
            q[r][r] -= rate

    frm = fluid_rate_matrix(net, drg)
    stats = sojourn_stats(net, drg)

    def class_value(values, members, what: str):
        got = {values[i] for i in members}
        if len(got) > 1:
            raise PartitionNotStable(f"members of a class disagree on {what}")
        return got.pop()

    r_diag = tuple(class_value(frm.diag, members, "the potential drift") for members in classes)
    sj_q = tuple(class_value(stats.sj, members, "the sojourn time") for members in classes)
    var_q = tuple(class_value(stats.var, members, "the sojourn variance") for members in classes)

    v, w = collector_distributor(classes, n)
    model = QuotientModel(
        classes=tuple(tuple(c) for c in classes),
        edges=tuple(edges),
        q_q=Ctmc(tuple(tuple(row) for row in q)),
        r_q=FluidRateMatrix(r_diag),
        sj_q=sj_q,
        var_q=var_q,
        initial_class=next(r for r, c in enumerate(classes) if 0 in c),
        v=tuple(tuple(row) for row in v),
        w=tuple(tuple(row) for row in w),
    )
    _assert_conjugation_identities(net, drg, model)
    return model


def _assert_conjugation_identities(net: Lfspn, drg: Drg, model: QuotientModel) -> None:
    v = [list(row) for row in model.v]
    w = [list(row) for row in model.w]
    q = [list(row) for row in transition_rate_matrix(net, drg).q]
    q_q = [list(row) for row in model.q_q.q]
    if mat_mul(mat_mul(w, q), v) != q_q or mat_mul(q, v) != mat_mul(v, q_q):
        raise PartitionNotStable("conjugation identity W Q V = Q_q failed")
    r = _diag_matrix(fluid_rate_matrix(net, drg).diag)
    r_q = _diag_matrix(model.r_q.diag)
    if mat_mul(mat_mul(w, r), v) != r_q or mat_mul(r, v) != mat_mul(v, r_q):
        raise PartitionNotStable("conjugation identity W R V = R_q failed")


def _diag_matrix(diag: Sequence[Fraction]) -> Matrix:
    n = len(diag)
    return [[diag[i] if i == j else Fraction(0) for j in range(n)] for i in range(n)]


@dataclass(frozen=True)
class QuotientFunctions:
    """Stationary quantities of the quotient SFM, obtained by aggregating the
    full solution with the collector matrix (phi V, ell V, F V, f V)."""

    phi_q: tuple[Union[Fraction, float], ...]
    ell_q: tuple[float, ...]
    big_f: Callable[[float], np.ndarray]
    small_f: Callable[[float], np.ndarray]


def quotient_functions(
    net: Lfspn, drg: Drg, partition: Partition, sol: SfmSolution, tag: str = "n"
) -> QuotientFunctions:
    classes = partition.classes_for(tag)
    phi_q = tuple(sum((sol.phi[i] for i in members), Fraction(0) if isinstance(sol.phi[0], Fraction) else 0.0)
                  for members in classes)
    ell_q = tuple(float(sum(sol.ell[i] for i in members)) for members in classes)

    def aggregate(vec: np.ndarray) -> np.ndarray:
        return np.array([sum(vec[i] for i in members) for members in classes])

    return QuotientFunctions(
        phi_q=phi_q,
        ell_q=ell_q,
        big_f=lambda x: aggregate(sol.eval(x)[0]),
        small_f=lambda x: aggregate(sol.eval(x)[1]),
    )


@dataclass
class IdentityCheck:
    name: str
    ok: bool
    detail: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "ok": self.ok, "detail": self.detail}


def verify_quotient_identities(
    net: Lfspn,
    drg: Drg,
    partition: Partition,
    sol: Optional[SfmSolution] = None,
    tag: str = "n",
) -> list[IdentityCheck]:
    """Check the collector/distributor identities and, when a fluid solution
    is supplied, the aggregated stationary equations. Failures are reported,
    not raised.
    """
    checks: list[IdentityCheck] = []
    try:
        model = quotient_model(net, drg, partition, tag)
    except PartitionNotStable as exc:
        return [IdentityCheck("partition-stable", False, exc.message)]
    checks.append(IdentityCheck("partition-stable", True))

    v = [list(row) for row in model.v]
    w = [list(row) for row in model.w]
    l = len(model.classes)
    identity = [[Fraction(int(i == j)) for j in range(l)] for i in range(l)]
    checks.append(IdentityCheck("W V = I", mat_mul(w, v) == identity))

    q = [list(row) for row in transition_rate_matrix(net, drg).q]
    q_q = [list(row) for row in model.q_q.q]
    checks.append(IdentityCheck("Q V = V Q_q", mat_mul(q, v) == mat_mul(v, q_q)))
    checks.append(IdentityCheck("W Q V = Q_q", mat_mul(mat_mul(w, q), v) == q_q))

    r = _diag_matrix(fluid_rate_matrix(net, drg).diag)
    r_q = _diag_matrix(model.r_q.diag)
    checks.append(IdentityCheck("R V = V R_q", mat_mul(r, v) == mat_mul(v, r_q)))
    checks.append(IdentityCheck("W R V = R_q", mat_mul(mat_mul(w, r), v) == r_q))

    stats = sojourn_stats(net, drg)
    if all(s is not None for s in stats.sj):
        ones = [[Fraction(1)] * l]
        sj_full = mat_mul(ones, mat_mul(mat_mul(w, _diag_matrix(stats.sj)), v))[0]
        var_full = mat_mul(ones, mat_mul(mat_mul(w, _diag_matrix(stats.var)), v))[0]
        checks.append(IdentityCheck("1 W Diag(SJ) V = SJ_q", tuple(sj_full) == model.sj_q))
        checks.append(IdentityCheck("1 W Diag(VAR) V = VAR_q", tuple(var_full) == model.var_q))
    else:
        checks.append(IdentityCheck("1 W Diag(SJ) V = SJ_q", True, "skipped: terminal states present"))

    phi_q = steady_state(model.q_q)
    if sol is not None:
        funcs = quotient_functions(net, drg, partition, sol, tag)
        if isinstance(phi_q[0], Fraction) and isinstance(funcs.phi_q[0], Fraction):
            checks.append(IdentityCheck("phi V solves the quotient chain", tuple(phi_q) == funcs.phi_q))
        else:
            err = max(abs(float(a) - float(b)) for a, b in zip(phi_q, funcs.phi_q))
            checks.append(IdentityCheck("phi V solves the quotient chain", err <= 1e-9, f"max err {err:g}"))
        # sampled finite-difference check of dF_q/dx R_q = F_q Q_q
        q_qf = model.q_q.as_numpy()
        r_qf = np.array([float(x) for x in model.r_q.diag])
        h = 1e-6
        worst = 0.0
        for x in (0.5, 1.0, 2.0, 5.0):
            df = (funcs.big_f(x + h) - funcs.big_f(x - h)) / (2 * h)
            resid = df * r_qf - funcs.big_f(x) @ q_qf
            worst = max(worst, float(np.max(np.abs(resid))))
        checks.append(IdentityCheck("dF_q/dx R_q = F_q Q_q (sampled)", worst <= 1e-6, f"max resid {worst:g}"))
    return checks


# --- isomorphism -------------------------------------------------------------

def _iso_search(n: int, init_a: int, init_b: int, compatible, edges_match) -> bool:
    mapping: dict[int, int] = {init_a: init_b}
    used = {init_b}
    if not compatible(init_a, init_b):
        return False

    order = [i for i in range(n) if i != init_a]

    def extend(k: int) -> bool:
        if k == len(order):
            return edges_match(mapping)
        i = order[k]
        for j in range(n):
            if j in used or not compatible(i, j):
                continue
            mapping[i] = j
            used.add(j)
            if extend(k + 1):
                return True
            del mapping[i]
            used.discard(j)
        return False

    return extend(0)


def ctmc_isomorphic(a: Ctmc, b: Ctmc, init_a: int = 0, init_b: int = 0) -> bool:
    """Rate-preserving state bijection binding the initial states.

    Exhaustive backtracking; guarded to small chains (fixture assertions).
    """
    n = len(a)
    if len(b) != n:
        return False
    if n > ISOMORPHISM_STATE_LIMIT:
        raise ValueError(f"isomorphism check limited to {ISOMORPHISM_STATE_LIMIT} states")

    def profile(q, i):
        return (q[i][i], tuple(sorted(q[i])), tuple(sorted(row[i] for row in q)))

    def compatible(i, j):
        return profile(a.q, i) == profile(b.q, j)

    def edges_match(mapping):
        return all(
            a.q[i][k] == b.q[mapping[i]][mapping[k]] for i in range(n) for k in range(n)
        )

    return _iso_search(n, init_a, init_b, compatible, edges_match)


def quotient_drg_isomorphic(ma: QuotientModel, mb: QuotientModel) -> bool:
    """Isomorphism of quotient reachability graphs: a bijection of classes
    preserving (action, rate)-labeled edges and binding the initial classes.
    """
    n = len(ma.classes)
    if len(mb.classes) != n:
        return False
    if n > ISOMORPHISM_STATE_LIMIT:
        raise ValueError(f"isomorphism check limited to {ISOMORPHISM_STATE_LIMIT} states")

    def edge_map(model):
        out: dict[tuple[int, int], dict[tuple[str, Fraction], int]] = {}
        for r, action, rate, s in model.edges:
            out.setdefault((r, s), {})[(action, rate)] = out.get((r, s), {}).get((action, rate), 0) + 1
        return out

    ea, eb = edge_map(ma), edge_map(mb)

    def profile(model, edges, i):
        outs = sorted(
            (action, rate) for (r, _), labels in edges.items() if r == i for (action, rate) in labels
        )
        ins = sorted(
            (action, rate) for (_, s), labels in edges.items() if s == i for (action, rate) in labels
        )
        return (model.r_q.diag[i], model.sj_q[i], tuple(outs), tuple(ins))

    def compatible(i, j):
        return profile(ma, ea, i) == profile(mb, eb, j)

    def edges_match(mapping):
        remapped = {
            (mapping[r], mapping[s]): labels for (r, s), labels in ea.items()
        }
        return remapped == eb

    return _iso_search(n, ma.initial_class, mb.initial_class, compatible, edges_match)

"""JSON-ready orchestration of the analysis pipelines.

Each function takes a raw net document (parsed JSON), runs one named
analysis and returns a plain dict with rationals rendered as "p/q" strings.
The HTTP service and the CLI are both thin wrappers over these.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Optional, Sequence

from . import ctmc as ctmc_mod
from . import sfm as sfm_mod
from .equivalence import fluid_bisimulation, fluid_traces, trace_equivalent
from .errors import EigenCountMismatch, MultiContinuous, NetFormatError, NotErgodic, Unstable
from .logic import interpret_flt, parse_formula, satisfies_flb
from .measures import DISCRETE_KINDS, MeasureRequest, discrete_measures, hybrid_measures
from .model import Lfspn, format_rational, net_from_dict, parse_rational, validate_net
from .quotient import largest_autobisimulation, quotient_functions, quotient_model, verify_quotient_identities
from .reachability import DEFAULT_MAX_STATES, explore
from .sim import SimConfig, estimate_stationary, simulate, trajectory_rows


def _load(net_doc: dict, max_states: Optional[int]):
    net = net_from_dict(net_doc)
    report = validate_net(net)
    if not report.ok:
        code, message = report.errors[0]
        raise NetFormatError(f"invalid net: {message}", code=code)
    drg = explore(net, max_states or DEFAULT_MAX_STATES)
    return net, drg


def _fmt(x) -> str:
    return "inf" if x is None else format_rational(x)


def _fmt_row(row) -> list[str]:
    return [_fmt(x) for x in row]


def _fmt_phi(phi) -> list:
    return [_fmt(p) if isinstance(p, Fraction) else float(p) for p in phi]


def validate_analysis(net_doc: dict) -> dict:
    net = net_from_dict(net_doc)
    return validate_net(net).to_dict()


def reach_analysis(net_doc: dict, max_states: Optional[int] = None) -> dict:
    net, drg = _load(net_doc, max_states)
    return drg.to_dict()


def ctmc_analysis(net_doc: dict, max_states: Optional[int] = None) -> dict:
    net, drg = _load(net_doc, max_states)
    q = ctmc_mod.transition_rate_matrix(net, drg)
    p = ctmc_mod.embedded_tpm(net, drg)
    stats = ctmc_mod.sojourn_stats(net, drg)
    phi = ctmc_mod.steady_state(q)
    return {
        "states": [list(m) for m in drg.states],
        "Q": [_fmt_row(row) for row in q.q],
        "P": [_fmt_row(row) for row in p.p],
        "RE": _fmt_row(stats.re),
        "SJ": _fmt_row(stats.sj),
        "VAR": _fmt_row(stats.var),
        "phi": _fmt_phi(phi),
    }


def _solve_sfm(net: Lfspn, drg):
    q = ctmc_mod.transition_rate_matrix(net, drg)
    frm = sfm_mod.fluid_rate_matrix(net, drg)
    phi = ctmc_mod.steady_state(q)
    sol = sfm_mod.spectral_solve(q, frm, phi)
    return q, frm, phi, sol


def sfm_analysis(
    net_doc: dict,
    xmax: float = 10.0,
    points: int = 101,
    max_states: Optional[int] = None,
) -> dict:
    net, drg = _load(net_doc, max_states)
    q, frm, phi, sol = _solve_sfm(net, drg)
    drift, stable = sfm_mod.stability(phi, frm)
    if points < 2:
        raise ValueError("the evaluation grid needs at least 2 points")
    xs = [xmax * i / (points - 1) for i in range(points)]
    grid = []
    for x in xs:
        big_f, small_f = sol.eval(x)
        grid.append({"x": x, "F": [float(v) for v in big_f], "f": [float(v) for v in small_f]})
    return {
        "states": [list(m) for m in drg.states],
        "R": _fmt_row(frm.diag),
        "phi": _fmt_phi(phi),
        "mean_drift": _fmt(drift) if isinstance(drift, Fraction) else float(drift),
        "stable": stable,
        "eigenvalues": [[g.real, g.imag] for g in sol.eigenvalues()],
        "coefficients": [[a.real, a.imag] for a in sol.coeffs],
        "ell": [float(v) for v in sol.ell],
        "grid": grid,
    }


def bisim_analysis(doc_a: dict, doc_b: dict, max_states: Optional[int] = None) -> dict:
    net_a, drg_a = _load(doc_a, max_states)
    net_b, drg_b = _load(doc_b, max_states)
    verdict = fluid_bisimulation(net_a, drg_a, net_b, drg_b)
    out = verdict.to_dict()
    out["states_left"] = [list(m) for m in drg_a.states]
    out["states_right"] = [list(m) for m in drg_b.states]
    return out


def trace_eq_analysis(
    doc_a: dict,
    doc_b: dict,
    depth: int = 6,
    key: str = "sj",
    max_states: Optional[int] = None,
) -> dict:
    net_a, drg_a = _load(doc_a, max_states)
    net_b, drg_b = _load(doc_b, max_states)
    verdict = trace_equivalent(net_a, drg_a, net_b, drg_b, depth=depth, key=key)
    out = verdict.to_dict()
    out["note"] = f"equivalent up to depth {depth}" if verdict.equivalent else "distinguishing trace found"
    return out


def traces_analysis(net_doc: dict, depth: int = 6, key: str = "sj", max_states: Optional[int] = None) -> dict:
    net, drg = _load(net_doc, max_states)
    return {"traces": [t.to_dict() for t in fluid_traces(net, drg, depth, key)], "depth": depth}


def quotient_analysis(net_doc: dict, verify: bool = True, max_states: Optional[int] = None) -> dict:
    net, drg = _load(net_doc, max_states)
    partition = largest_autobisimulation(net, drg)
    model = quotient_model(net, drg, partition)
    out = model.to_dict()
    out["states"] = [list(m) for m in drg.states]
    try:
        q, frm, phi, sol = _solve_sfm(net, drg)
    except (Unstable, NotErgodic, MultiContinuous, EigenCountMismatch):
        # the discrete quotient is still meaningful without a fluid solution
        sol = None
    try:
        out["phi_q"] = _fmt_phi(ctmc_mod.steady_state(model.q_q))
    except NotErgodic:
        out["phi_q"] = None
    if sol is not None:
        funcs = quotient_functions(net, drg, partition, sol)
        out["ell_q"] = [float(v) for v in funcs.ell_q]
    if verify:
        checks = verify_quotient_identities(net, drg, partition, sol)
        out["identities"] = [c.to_dict() for c in checks]
    return out


def check_analysis(
    net_doc: dict,
    dialect: str,
    formula: str,
    sojourns: Optional[Sequence[str]] = None,
    rates: Optional[Sequence[str]] = None,
    max_states: Optional[int] = None,
) -> dict:
    net, drg = _load(net_doc, max_states)
    ast = parse_formula(formula, dialect)
    if dialect == "flt":
        if sojourns is None or rates is None:
            raise ValueError("the flt interpretation needs --sojourns and --rates sequences")
        varsigma = tuple(parse_rational(s) for s in sojourns)
        varrho = tuple(parse_rational(r) for r in rates)
        value = interpret_flt(net, drg, ast, varsigma, varrho)
        return {"dialect": dialect, "formula": str(ast), "value": format_rational(value)}
    satisfied = satisfies_flb(net, drg, 0, ast)
    return {"dialect": dialect, "formula": str(ast), "satisfied": satisfied}


def measures_analysis(net_doc: dict, requests: Sequence[dict], max_states: Optional[int] = None) -> dict:
    net, drg = _load(net_doc, max_states)
    q = ctmc_mod.transition_rate_matrix(net, drg)
    phi = ctmc_mod.steady_state(q)
    sol = None
    reports = []
    for item in requests:
        request = MeasureRequest(item.get("kind", ""), item.get("params", {}))
        if request.kind in DISCRETE_KINDS:
            reports.append(discrete_measures(phi, drg, net, request).to_dict())
        else:
            if sol is None:
                _, _, _, sol = _solve_sfm(net, drg)
            reports.append(hybrid_measures(phi, sol.ell, sol, drg, net, request).to_dict())
    return {"reports": reports}


def simulate_analysis(
    net_doc: dict,
    horizon: float,
    replications: int = 20,
    warmup_fraction: float = 0.2,
    seed: int = 0,
    grid: Sequence[float] = (),
    dump: bool = False,
    max_states: Optional[int] = None,
) -> dict:
    net, drg = _load(net_doc, max_states)
    config = SimConfig(
        horizon=horizon,
        replications=replications,
        warmup_fraction=warmup_fraction,
        seed=seed,
        grid=tuple(grid),
    )
    trajectories = simulate(net, drg, config)
    estimate = estimate_stationary(trajectories, len(drg), config)
    out = estimate.to_dict()
    out["states"] = [list(m) for m in drg.states]
    if dump:
        out["trajectories"] = [
            [[t, s, x] for t, s, x in trajectory_rows(traj)] for traj in trajectories
        ]
    return out

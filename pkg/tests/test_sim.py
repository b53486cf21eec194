import math
from fractions import Fraction

import numpy as np
import pytest

from fluidnet.model import net_from_dict
from fluidnet.reachability import explore
from fluidnet.sfm import potential_rate
from fluidnet.sim import (
    SimConfig,
    Segment,
    _append_linear,
    actual_rate,
    estimate_stationary,
    simulate,
    trajectory_rows,
)

F = Fraction

SINGLE_STATE = {
    "discrete_places": ["p"],
    "continuous_places": ["q"],
    "initial_marking": [1],
    "transitions": [],
}


def test_actual_rate_clamps_at_boundary(nets):
    assert actual_rate(nets["e1_b"], (0, 1), 0.0) == 0
    assert actual_rate(nets["e1_b"], (0, 1), 0.3) == -2
    assert actual_rate(nets["e1_b"], (1, 0), 0.0) == 1
    net = net_from_dict(SINGLE_STATE)
    assert actual_rate(net, (1,), 0.0) == 0


def test_boundary_hit_is_exact():
    # drift -2 from level 0.5: the boundary is reached after exactly 0.25
    # time units and the level stays 0 until the sojourn ends
    out = []
    final = _append_linear(out, 0.0, 1.0, 0, 0.5, -2.0)
    assert final == 0.0
    assert out == [Segment(0.0, 0.25, 0, 0.5, -2.0), Segment(0.25, 1.0, 0, 0.0, 0.0)]


def test_zero_horizon_trajectory(nets, drgs):
    trajs = simulate(nets["e1_b"], drgs["e1_b"], SimConfig(horizon=0.0, replications=1, seed=1))
    assert trajs == [[]]


def test_fixed_seed_reproducible(nets, drgs):
    cfg = SimConfig(horizon=50.0, replications=3, seed=7)
    a = simulate(nets["e1_b"], drgs["e1_b"], cfg)
    b = simulate(nets["e1_b"], drgs["e1_b"], cfg)
    assert a == b
    c = simulate(nets["e1_b"], drgs["e1_b"], SimConfig(horizon=50.0, replications=3, seed=8))
    assert a != c


def test_trajectory_invariants(nets, drgs):
    rp = {i: float(potential_rate(nets["docprep"], m)) for i, m in enumerate(drgs["docprep"].states)}
    trajs = simulate(nets["docprep"], drgs["docprep"], SimConfig(horizon=200.0, replications=3, seed=11))
    for traj in trajs:
        previous_end = 0.0
        for seg in traj:
            assert seg.start == pytest.approx(previous_end)
            previous_end = seg.end
            assert seg.x0 >= 0.0
            assert seg.level_at(seg.end) >= -1e-12
            assert seg.slope == rp[seg.state] or seg.slope == 0.0
            if seg.slope == 0.0 and rp[seg.state] < 0:
                assert seg.x0 == 0.0  # clamped exactly at the boundary


def test_terminal_net_stays_forever():
    net = net_from_dict(SINGLE_STATE)
    drg = explore(net)
    cfg = SimConfig(horizon=10.0, replications=2, seed=3)
    trajs = simulate(net, drg, cfg)
    est = estimate_stationary(trajs, 1, cfg)
    assert est.phi_hat.tolist() == [1.0]
    assert est.ell_hat.tolist() == [1.0]


def test_estimates_close_to_analytic(nets, drgs, phis, solutions):
    cfg = SimConfig(horizon=3000.0, replications=8, seed=5, grid=(0.5, 1.0, 2.0, 5.0))
    trajs = simulate(nets["e1_b"], drgs["e1_b"], cfg)
    est = estimate_stationary(trajs, 2, cfg)
    target = np.array([float(p) for p in phis["e1_b"]])
    assert np.max(np.abs(est.phi_hat - target)) < 0.02
    assert np.max(np.abs(est.ell_hat - np.array(solutions["e1_b"].ell))) < 0.01
    annotated = np.column_stack([solutions["e1_b"].eval(x)[0] for x in cfg.grid])
    assert np.max(np.abs(est.f_hat - annotated)) < 0.03


def test_confidence_intervals_shrink_with_horizon(nets, drgs):
    short = SimConfig(horizon=400.0, replications=10, seed=9, grid=(1.0,))
    long = SimConfig(horizon=800.0, replications=10, seed=9, grid=(1.0,))
    est_short = estimate_stationary(simulate(nets["e1_b"], drgs["e1_b"], short), 2, short)
    est_long = estimate_stationary(simulate(nets["e1_b"], drgs["e1_b"], long), 2, long)
    ratio = est_long.phi_halfwidth.mean() / est_short.phi_halfwidth.mean()
    assert 0.5 <= ratio <= 0.9  # roughly 1/sqrt(2)


def test_trajectory_rows_monotone_time(nets, drgs):
    trajs = simulate(nets["e1_b"], drgs["e1_b"], SimConfig(horizon=20.0, replications=1, seed=2))
    rows = trajectory_rows(trajs[0])
    times = [row[0] for row in rows]
    assert times == sorted(times)
    assert all(x >= 0 for _, _, x in rows)

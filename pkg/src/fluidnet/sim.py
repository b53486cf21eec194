"""Monte-Carlo oracle: race-semantics trajectory simulation with piecewise
linear fluid integration (reflecting lower boundary at 0) and time-average
estimators for the stationary quantities.

Replications draw from independent Philox streams keyed by (seed, index), so
results are reproducible regardless of scheduling, and aggregation is a
deterministic reduction ordered by replication index.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .model import Lfspn, Marking, enabled, fire, transition_rate
from .reachability import Drg
from .sfm import potential_rate


@dataclass(frozen=True)
class SimConfig:
    horizon: float
    replications: int = 20
    warmup_fraction: float = 0.2
    seed: int = 0
    grid: tuple[float, ...] = ()

    def __post_init__(self):
        if self.horizon < 0:
            raise ValueError("horizon must be nonnegative")
        if self.replications < 1:
            raise ValueError("at least one replication is required")
        if not 0 <= self.warmup_fraction < 1:
            raise ValueError("warmup fraction must lie in [0, 1)")


@dataclass(frozen=True)
class Segment:
    """One linear piece of a trajectory: state is constant on [start, end)
    and the fluid level is x0 + slope * (t - start)."""

    start: float
    end: float
    state: int
    x0: float
    slope: float

    def level_at(self, t: float) -> float:
        return self.x0 + self.slope * (t - self.start)


Trajectory = list[Segment]


@dataclass
class SimEstimate:
    phi_hat: np.ndarray
    phi_halfwidth: np.ndarray
    ell_hat: np.ndarray
    ell_halfwidth: np.ndarray
    f_hat: np.ndarray  # states x grid
    f_halfwidth: np.ndarray
    grid: tuple[float, ...]
    flags: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "phi_hat": self.phi_hat.tolist(),
            "phi_halfwidth": self.phi_halfwidth.tolist(),
            "ell_hat": self.ell_hat.tolist(),
            "ell_halfwidth": self.ell_halfwidth.tolist(),
            "F_hat": self.f_hat.tolist(),
            "F_halfwidth": self.f_halfwidth.tolist(),
            "grid": list(self.grid),
            "flags": self.flags,
        }


def actual_rate(net: Lfspn, m: Marking, x: float) -> Fraction:
    """Fluid slope in (m, x): the potential drift, clamped to 0 at an empty
    buffer when the drift is negative."""
    if x < 0:
        raise ValueError("fluid level must be nonnegative")
    rp = potential_rate(net, m)
    if x == 0:
        return max(rp, Fraction(0))
    return rp


def _compile(net: Lfspn, drg: Drg):
    """Per-state arrays: exponential scales, successor indices, drift."""
    scales: list[np.ndarray] = []
    targets: list[list[int]] = []
    drifts: list[float] = []
    for m in drg.states:
        ts = enabled(net, m)
        scales.append(np.array([1.0 / float(transition_rate(net, t, m)) for t in ts]))
        targets.append([drg.index[fire(net, m, t)] for t in ts])
        drifts.append(float(potential_rate(net, m)))
    return scales, targets, drifts


def _append_linear(out: Trajectory, t0: float, t1: float, state: int, x: float, slope: float) -> float:
    """Extend the trajectory over [t0, t1) with the boundary clamp; the hit
    time is exact for linear dynamics (x / |slope|). Returns the final level."""
    if t1 <= t0:
        return x
    if slope < 0 and x > 0:
        hit = t0 + x / (-slope)
        if hit < t1:
            out.append(Segment(t0, hit, state, x, slope))
            out.append(Segment(hit, t1, state, 0.0, 0.0))
            return 0.0
        out.append(Segment(t0, t1, state, x, slope))
        return x + slope * (t1 - t0)
    if slope < 0:  # already at the boundary
        out.append(Segment(t0, t1, state, 0.0, 0.0))
        return 0.0
    out.append(Segment(t0, t1, state, x, slope))
    return x + slope * (t1 - t0)


def simulate(net: Lfspn, drg: Drg, config: SimConfig) -> list[Trajectory]:
    """Race-semantics simulation: in each marking, every enabled transition
    draws an exponential delay with its own rate and the minimum fires."""
    scales, targets, drifts = _compile(net, drg)
    trajectories: list[Trajectory] = []
    for rep in range(config.replications):
        key = np.random.SeedSequence((config.seed, rep)).generate_state(2, np.uint64)
        rng = np.random.Generator(np.random.Philox(key=key))
        out: Trajectory = []
        t = 0.0
        state = 0
        x = 0.0
        while t < config.horizon:
            if len(scales[state]) == 0:
                x = _append_linear(out, t, config.horizon, state, x, drifts[state])
                break
            delays = rng.exponential(scales[state])
            winner = int(np.argmin(delays))
            t_next = min(t + float(delays[winner]), config.horizon)
            x = _append_linear(out, t, t_next, state, x, drifts[state])
            t = t_next
            if t >= config.horizon:
                break
            state = targets[state][winner]
        trajectories.append(out)
    return trajectories


def estimate_stationary(
    trajectories: Sequence[Trajectory], n_states: int, config: SimConfig
) -> SimEstimate:
    """Time-average estimators after warmup, with replication-level normal
    95% confidence half-widths."""
    grid = tuple(config.grid)
    start = config.warmup_fraction * config.horizon
    total = config.horizon - start
    reps = len(trajectories)
    phi = np.zeros((reps, n_states))
    ellm = np.zeros((reps, n_states))
    fm = np.zeros((reps, n_states, len(grid)))
    for r, traj in enumerate(trajectories):
        for seg in traj:
            lo = max(seg.start, start)
            hi = seg.end
            if hi <= lo:
                continue
            dur = hi - lo
            phi[r, seg.state] += dur
            if seg.slope == 0.0 and seg.x0 == 0.0:
                ellm[r, seg.state] += dur
            for g, xg in enumerate(grid):
                fm[r, seg.state, g] += _time_at_or_below(seg, lo, hi, xg)
    phi /= total
    ellm /= total
    fm /= total

    def ci(sample: np.ndarray) -> np.ndarray:
        if reps < 2:
            return np.full(sample.shape[1:], np.inf)
        return 1.96 * sample.std(axis=0, ddof=1) / np.sqrt(reps)

    flags = []
    if reps < 2:
        flags.append("single replication: no confidence intervals")
    return SimEstimate(
        phi_hat=phi.mean(axis=0),
        phi_halfwidth=ci(phi),
        ell_hat=ellm.mean(axis=0),
        ell_halfwidth=ci(ellm),
        f_hat=fm.mean(axis=0),
        f_halfwidth=ci(fm),
        grid=grid,
        flags=flags,
    )


def _time_at_or_below(seg: Segment, lo: float, hi: float, threshold: float) -> float:
    """Occupation time of {X <= threshold} on [lo, hi) within one segment."""
    x_lo = seg.level_at(lo)
    if seg.slope == 0.0:
        return hi - lo if x_lo <= threshold else 0.0
    cross = seg.start + (threshold - seg.x0) / seg.slope
    if seg.slope > 0.0:
        return max(0.0, min(hi, cross) - lo)
    return max(0.0, hi - max(lo, cross))


def trajectory_rows(traj: Trajectory) -> list[tuple[float, int, float]]:
    """(time, state, fluid level) rows at segment breakpoints, for CSV dumps."""
    rows = [(seg.start, seg.state, seg.x0) for seg in traj]
    if traj:
        last = traj[-1]
        rows.append((last.end, last.state, last.level_at(last.end)))
    return rows

import math
from fractions import Fraction

import pytest
import scipy.integrate

from fluidnet.errors import DivisionByZero, ParameterMismatch, UnknownKind
from fluidnet.measures import (
    MeasureRequest,
    boundary_flow_ratio,
    discrete_measures,
    hybrid_measures,
)
from fluidnet.model import net_from_dict
from fluidnet.sfm import stability, fluid_rate_matrix

F = Fraction


def report(phis, drgs, nets, name, kind, **params):
    return discrete_measures(phis[name], drgs[name], nets[name], MeasureRequest(kind, params))


def hybrid(phis, solutions, drgs, nets, name, kind, **params):
    sol = solutions[name]
    return hybrid_measures(phis[name], sol.ell, sol, drgs[name], nets[name], MeasureRequest(kind, params))


def test_time_fraction_docprep(phis, drgs, nets):
    got = report(phis, drgs, nets, "docprep", "time-fraction", markings=[[1, 1, 0, 0]])
    assert got.value == F(2, 9)


def test_time_fraction_full_set_is_one(phis, drgs, nets):
    for name in ("e1_b", "docprep", "docprep_ext"):
        markings = [list(m) for m in drgs[name].states]
        got = report(phis, drgs, nets, name, "time-fraction", markings=markings)
        assert got.value == 1


def test_firing_frequencies_docprep(phis, drgs, nets):
    # in the concurrent net every transition fires once per renewal cycle, so
    # the three throughputs coincide; the "first text write" rate 2/9 is the
    # throughput of the dedicated initial tx transition of the sequential net
    assert report(phis, drgs, nets, "docprep", "firing-freq", transition="t3").value == F(2, 3)
    assert report(phis, drgs, nets, "docprep", "firing-freq", transition="t1").value == F(2, 3)
    assert report(phis, drgs, nets, "docprep_seq", "firing-freq", transition="t1").value == F(2, 9)


def test_tokens_docprep(phis, drgs, nets):
    got = report(phis, drgs, nets, "docprep", "tokens", place="p1", k=1)
    assert got.value == F(2, 3)


def test_tokens_pmf_sums_to_one(phis, drgs, nets):
    for name in ("e1_b", "docprep", "docprep_ext"):
        net = nets[name]
        for place in net.discrete_places:
            got = report(phis, drgs, nets, name, "tokens-pmf", place=place)
            total = sum(F(term["prob"]) for term in got.terms)
            assert total == 1


def test_tokens_num_matches_pmf_mean(phis, drgs, nets):
    pmf = report(phis, drgs, nets, "docprep", "tokens-pmf", place="p3")
    direct = report(phis, drgs, nets, "docprep", "tokens-num", place="p3")
    assert direct.value == pmf.value


def test_exit_and_traversal_frequency(phis, drgs, nets):
    got = report(phis, drgs, nets, "e1_b", "exit-freq", marking=[0, 1])
    assert got.value == 1
    got = report(phis, drgs, nets, "e1_b", "trav-freq", source=[0, 1], target=[1, 0])
    assert got.value == 1


def test_reward_prob(phis, drgs, nets):
    got = report(phis, drgs, nets, "docprep", "reward-prob", reward=["1", "0", "0", "1"])
    assert got.value == F(4, 9)
    with pytest.raises(ParameterMismatch):
        report(phis, drgs, nets, "docprep", "reward-prob", reward=["2", "0", "0", "0"])


def test_delay_ratio(phis, drgs, nets):
    got = report(phis, drgs, nets, "docprep", "delay", trav_tokens="3/2", rate="2/3")
    assert got.value == F(9, 4)
    with pytest.raises(DivisionByZero):
        report(phis, drgs, nets, "docprep", "delay", trav_tokens="1", rate="0")


def test_unknown_kind(phis, drgs, nets, solutions):
    with pytest.raises(UnknownKind):
        report(phis, drgs, nets, "docprep", "nonsense")
    with pytest.raises(UnknownKind):
        report(phis, drgs, nets, "docprep", "fluid-level")
    with pytest.raises(UnknownKind):
        hybrid(phis, solutions, drgs, nets, "docprep", "time-fraction")


def test_fluid_level_docprep(phis, solutions, drgs, nets):
    got = hybrid(phis, solutions, drgs, nets, "docprep", "fluid-level")
    assert got.value == pytest.approx(61.0 / 63.0, abs=1e-9)


def test_fluid_level_threshold_docprep(phis, solutions, drgs, nets):
    got = hybrid(phis, solutions, drgs, nets, "docprep", "fluid-level-above", v=5.0)
    assert got.value == pytest.approx(0.6181, abs=5e-4)


def test_fluid_level_monotone_vanishing(phis, solutions, drgs, nets):
    previous = 1.0
    for v in (0.5, 1.0, 2.0, 5.0, 20.0, 80.0, 200.0):
        got = hybrid(phis, solutions, drgs, nets, "docprep", "fluid-level-above", v=v)
        assert got.value <= previous + 1e-12
        previous = got.value
    assert previous < 1e-6


def test_fluid_flow_equals_stability_drift(phis, solutions, drgs, nets):
    for name in ("e1_b", "docprep"):
        got = hybrid(phis, solutions, drgs, nets, name, "fluid-flow")
        drift, _ = stability(phis[name], fluid_rate_matrix(nets[name], drgs[name]))
        assert got.value == drift
    assert hybrid(phis, solutions, drgs, nets, "docprep", "fluid-flow").value == F(-2, 9)


def test_proportional_arc_flows_running_example(phis, solutions, drgs, nets):
    # class H2 = {M2}: out-arc flows 4/5 + 6/5 = 2 and in-arc flows 2/3 + 4/3 = 2
    out2 = hybrid(phis, solutions, drgs, nets, "e1_b", "arc-flow-out", transition="t2")
    out3 = hybrid(phis, solutions, drgs, nets, "e1_b", "arc-flow-out", transition="t3")
    assert out2.value == pytest.approx(4.0 / 5.0, abs=1e-9)
    assert out3.value == pytest.approx(6.0 / 5.0, abs=1e-9)
    in2 = hybrid(phis, solutions, drgs, nets, "e1_b", "arc-flow-in", transition="t2")
    in3 = hybrid(phis, solutions, drgs, nets, "e1_b", "arc-flow-in", transition="t3")
    assert in2.value + in3.value == pytest.approx(2.0, abs=1e-9)
    assert in2.value == pytest.approx(2.0 / 3.0, abs=1e-9)


def test_aggregate_measures_preserved_on_bisimilar_pair(phis, solutions, drgs, nets):
    # the H2 aggregates from the worked example: firing frequency 1, exit
    # frequency 1, traversal frequency into H1 equal to 1, positive-level mass 1/4
    f_a = report(phis, drgs, nets, "e1_b", "firing-freq", transition="t2").value + \
        report(phis, drgs, nets, "e1_b", "firing-freq", transition="t3").value
    f_b = report(phis, drgs, nets, "e1p_b", "firing-freq", transition="t3").value + \
        report(phis, drgs, nets, "e1p_b", "firing-freq", transition="t4").value
    assert f_a == f_b == 1

    e_a = report(phis, drgs, nets, "e1_b", "exit-freq", marking=[0, 1]).value
    e_b = report(phis, drgs, nets, "e1p_b", "exit-freq", marking=[0, 1, 0]).value + \
        report(phis, drgs, nets, "e1p_b", "exit-freq", marking=[0, 0, 1]).value
    assert e_a == e_b == 1

    t_a = report(phis, drgs, nets, "e1_b", "trav-freq", source=[0, 1], target=[1, 0]).value
    t_b = report(phis, drgs, nets, "e1p_b", "trav-freq", source=[0, 1, 0], target=[1, 0, 0]).value + \
        report(phis, drgs, nets, "e1p_b", "trav-freq", source=[0, 0, 1], target=[1, 0, 0]).value
    assert t_a == t_b == 1

    level_a = float(phis["e1_b"][1]) - solutions["e1_b"].ell[1]
    level_b = (float(phis["e1p_b"][1]) - solutions["e1p_b"].ell[1]) + \
        (float(phis["e1p_b"][2]) - solutions["e1p_b"].ell[2])
    assert level_a == pytest.approx(0.25, abs=1e-9)
    assert level_b == pytest.approx(0.25, abs=1e-9)


def test_hybrid_reward_constant_one(phis, solutions, drgs, nets):
    ones = [[{"coeffs": ["1"]}] for _ in range(4)]
    got = hybrid(phis, solutions, drgs, nets, "docprep", "hybrid-reward", reward=ones)
    assert got.value == pytest.approx(1.0, abs=1e-9)


def test_hybrid_reward_indicator_matches_fluid_level(phis, solutions, drgs, nets):
    # r_i(x) = 1 for x >= 5 reproduces the threshold fluid-level measure
    indicator = [[{"from": 5.0, "coeffs": ["1"]}] for _ in range(4)]
    got = hybrid(phis, solutions, drgs, nets, "docprep", "hybrid-reward", reward=indicator)
    reference = hybrid(phis, solutions, drgs, nets, "docprep", "fluid-level-above", v=5.0)
    assert got.value == pytest.approx(reference.value, abs=1e-9)


def test_hybrid_reward_polynomial_against_quadrature(phis, solutions, drgs, nets):
    sol = solutions["docprep"]
    # r_i(x) = x/10 capped on [0, 10), then 1: piecewise polynomial in range
    pieces = [{"from": 0.0, "to": 10.0, "coeffs": ["0", "1/10"]}, {"from": 10.0, "coeffs": ["1"]}]
    reward = [pieces for _ in range(4)]
    got = hybrid(phis, solutions, drgs, nets, "docprep", "hybrid-reward", reward=reward)

    def r(x):
        return x / 10.0 if x < 10.0 else 1.0

    expected = 0.0
    for i in range(4):
        expected += sol.ell[i] * r(0.0)
        integral, _ = scipy.integrate.quad(lambda x: sol.eval(x)[1][i] * r(x), 0.0, 400.0, limit=400)
        expected += integral
    assert got.value == pytest.approx(expected, abs=1e-7)


def test_boundary_flow_ratio_and_division_guard():
    net = net_from_dict({
        "discrete_places": ["p"],
        "continuous_places": ["q"],
        "initial_marking": [1],
        "transitions": [
            {"name": "t", "label": "a", "rate": "1", "in": {"p": 1}, "out": {"p": 1},
             "fluid_in": {"q": "3"}, "fluid_out": {"q": "5"}},
        ],
    })
    assert boundary_flow_ratio(net, (1,), outgoing=True) == F(3, 5)
    assert boundary_flow_ratio(net, (1,), outgoing=False) == F(5, 3)
    only_in = net_from_dict({
        "discrete_places": ["p"],
        "continuous_places": ["q"],
        "initial_marking": [1],
        "transitions": [
            {"name": "t", "label": "a", "rate": "1", "in": {"p": 1}, "out": {"p": 1},
             "fluid_in": {"q": "3"}},
        ],
    })
    with pytest.raises(DivisionByZero):
        boundary_flow_ratio(only_in, (1,), outgoing=True)

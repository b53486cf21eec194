from fractions import Fraction

import pytest

from fluidnet import ctmc as C
from fluidnet.equivalence import (
    fluid_bisimulation,
    fluid_change_length,
    fluid_change_marking,
    fluid_traces,
    refine_partition,
    trace_equivalent,
)
from fluidnet.errors import MultiContinuous, TerminalMarking
from fluidnet.model import enabled, fire, net_from_dict, transition_rate
from fluidnet.reachability import explore
from fluidnet.sfm import potential_rate

from conftest import fixture_doc

F = Fraction


def test_traces_running_example_depth2(nets, drgs):
    traces = {t.key(): t.prob for t in fluid_traces(nets["e1_t"], drgs["e1_t"], 2)}
    half = F(1, 2)
    sj = (half, half, half)
    rp = (F(1), F(-2), F(1))
    assert traces[(("a", "b"), sj, rp)] == half
    assert traces[(("a", "c"), sj, rp)] == half
    assert traces[((), (half,), (F(1),))] == 1
    assert traces[(("a",), (half, half), (F(1), F(-2)))] == 1


def test_traces_depth_zero(nets, drgs):
    traces = fluid_traces(nets["docprep"], drgs["docprep"], 0)
    assert len(traces) == 1
    only = traces[0]
    assert only.sigma == () and only.prob == 1
    assert only.varsigma == (F(1, 3),) and only.varrho == (F(3),)


def test_trace_probabilities_sum_to_one_per_length(nets, drgs):
    for name in ("e1_t", "e1p_t", "docprep", "docprep_ext"):
        traces = fluid_traces(nets[name], drgs[name], 6)
        by_len = {}
        for t in traces:
            by_len[len(t.sigma)] = by_len.get(len(t.sigma), F(0)) + t.prob
        assert all(by_len[n] == 1 for n in range(7))


def test_trace_equivalence_paper_pair(nets, drgs):
    verdict = trace_equivalent(nets["e1_t"], drgs["e1_t"], nets["e1p_t"], drgs["e1p_t"], depth=6)
    assert verdict.equivalent


def test_trace_equivalence_exit_rate_key(nets, drgs):
    verdict = trace_equivalent(nets["e1_t"], drgs["e1_t"], nets["e1p_t"], drgs["e1p_t"], depth=5, key="re")
    assert verdict.equivalent


def test_trace_equivalence_detects_rate_change(nets, drgs):
    doc = fixture_doc("e1_t")
    doc["transitions"][0]["rate"] = "3"
    variant = net_from_dict(doc)
    verdict = trace_equivalent(nets["e1_t"], drgs["e1_t"], variant, explore(variant), depth=3)
    assert not verdict.equivalent
    # the sojourn sequences differ already on the empty trace: SJ(M_N) 1/2 vs 1/3
    assert verdict.witness["trace"]["sojourns"] != []
    assert verdict.witness["prob_left"] is None or verdict.witness["prob_right"] is None


def test_trace_equivalence_reflexive(nets, drgs):
    for name in ("e1_t", "docprep_ext"):
        verdict = trace_equivalent(nets[name], drgs[name], nets[name], drgs[name], depth=4)
        assert verdict.equivalent


def test_bisimulation_paper_pair(nets, drgs):
    verdict = fluid_bisimulation(nets["e1_b"], drgs["e1_b"], nets["e1p_b"], drgs["e1p_b"])
    assert verdict.equivalent
    assert verdict.partition.blocks == (
        (("left", 0), ("right", 0)),
        (("left", 1), ("right", 1), ("right", 2)),
    )


def test_bisimulation_counterexample_pair(nets, drgs):
    verdict = fluid_bisimulation(nets["e1_t"], drgs["e1_t"], nets["e1p_t"], drgs["e1p_t"])
    assert not verdict.equivalent
    assert verdict.witness is not None


def test_strictness_witness(nets, drgs):
    # trace-equivalent at depth 6 yet not bisimilar
    assert trace_equivalent(nets["e1_t"], drgs["e1_t"], nets["e1p_t"], drgs["e1p_t"], depth=6).equivalent
    assert not fluid_bisimulation(nets["e1_t"], drgs["e1_t"], nets["e1p_t"], drgs["e1p_t"]).equivalent


def test_docprep_family_pairwise_bisimilar(nets, drgs):
    names = ["docprep", "docprep_seq", "docprep_abstracted"]
    for a in names:
        for b in names:
            verdict = fluid_bisimulation(nets[a], drgs[a], nets[b], drgs[b])
            assert verdict.equivalent, (a, b)


def test_bisimulation_partition_is_stable(nets, drgs):
    verdict = fluid_bisimulation(nets["e1_b"], drgs["e1_b"], nets["e1p_b"], drgs["e1p_b"])
    partition = verdict.partition
    data = {"left": (nets["e1_b"], drgs["e1_b"]), "right": (nets["e1p_b"], drgs["e1p_b"])}
    actions = {t.label for tag in data for t in data[tag][0].transitions}
    for block in partition.blocks:
        drifts = set()
        sojourns = set()
        for tag, i in block:
            net, drg = data[tag]
            m = drg.states[i]
            drifts.add(potential_rate(net, m))
            sojourns.add(C.sojourn_stats(net, drg).sj[i])
        assert len(drifts) == 1  # Remark 3
        assert len(sojourns) == 1  # Remarks 4 and 5
        for target_idx, target_block in enumerate(partition.blocks):
            for action in actions:
                rates = set()
                for tag, i in block:
                    net, drg = data[tag]
                    targets = [j for t2, j in target_block if t2 == tag]
                    rates.add(C.move_rate_by_action(net, drg, i, action, targets))
                assert len(rates) == 1  # Remark 1


def test_bisimulation_needs_single_continuous_place(nets, drgs):
    doc = fixture_doc("e1_b")
    doc["continuous_places"] = ["q", "q2"]
    twin = net_from_dict(doc)
    with pytest.raises(MultiContinuous):
        fluid_bisimulation(twin, explore(twin), nets["e1_b"], drgs["e1_b"])


def test_fluid_change_marking(nets):
    assert fluid_change_marking(nets["e1_b"], (1, 0)) == F(1, 2)
    assert fluid_change_marking(nets["e1_b"], (0, 1)) == F(-1)


def test_fluid_change_zero_drift():
    doc = fixture_doc("e1_b")
    for t in doc["transitions"]:
        t.pop("fluid_in", None)
        t.pop("fluid_out", None)
    net = net_from_dict(doc)
    assert fluid_change_marking(net, (1, 0)) == 0


def test_fluid_change_terminal_marking_rejected():
    net = net_from_dict({
        "discrete_places": ["p"], "continuous_places": ["q"],
        "initial_marking": [0], "transitions": [
            {"name": "t", "label": "a", "rate": "1", "in": {"p": 1}, "out": {}},
        ],
    })
    with pytest.raises(TerminalMarking):
        fluid_change_marking(net, (0,))


def test_fluid_change_length_paper_values(nets, drgs):
    assert fluid_change_length(nets["e1_t"], drgs["e1_t"], 1) == F(-1, 2)
    assert fluid_change_length(nets["e1p_t"], drgs["e1p_t"], 1) == F(-1, 2)


def test_fluid_change_length_zero(nets, drgs):
    assert fluid_change_length(nets["e1_t"], drgs["e1_t"], 0) == F(1, 2)
    assert fluid_change_length(nets["docprep"], drgs["docprep"], 0) == F(1)


def brute_force_fluid_change(net, drg, n):
    # independent oracle: enumerate all length-n paths explicitly
    stats = C.sojourn_stats(net, drg)
    rp = [potential_rate(net, m) for m in drg.states]
    total = F(0)

    def walk(state, length, prob, acc):
        nonlocal total
        acc = acc + stats.sj[state] * rp[state]
        if length == n:
            total += prob * acc
            return
        m = drg.states[state]
        re = stats.re[state]
        for t in enabled(net, m):
            target = drg.index[fire(net, m, t)]
            walk(target, length + 1, prob * transition_rate(net, t, m) / re, acc)

    walk(0, 0, F(1), F(0))
    return total


def test_fluid_change_length_matches_brute_force(nets, drgs):
    for name in ("e1_t", "e1p_t", "docprep"):
        for n in range(5):
            expected = brute_force_fluid_change(nets[name], drgs[name], n)
            assert fluid_change_length(nets[name], drgs[name], n) == expected


def test_trace_equivalence_preserves_fluid_change(nets, drgs):
    # equal trace sets force equal expected change volumes at every length
    for n in range(5):
        a = fluid_change_length(nets["e1_t"], drgs["e1_t"], n)
        b = fluid_change_length(nets["e1p_t"], drgs["e1p_t"], n)
        assert a == b


def test_autobisimulation_partition_via_refine(nets, drgs):
    partition = refine_partition({"n": (nets["e1p_b"], drgs["e1p_b"])})
    assert partition.classes_for("n") == [[0], [1, 2]]

import json
from fractions import Fraction
from importlib import resources

import pytest

from fluidnet import ctmc as ctmc_mod
from fluidnet import sfm as sfm_mod
from fluidnet.model import parse_net
from fluidnet.reachability import explore

FIXTURES = ["e1_t", "e1_b", "e1p_t", "e1p_b", "docprep", "docprep_seq", "docprep_ext", "docprep_abstracted"]


def fixture_text(name: str) -> str:
    return resources.files("fluidnet.fixtures").joinpath(name + ".json").read_text()


def fixture_doc(name: str) -> dict:
    return json.loads(fixture_text(name))


@pytest.fixture(scope="session")
def nets():
    return {name: parse_net(fixture_text(name)) for name in FIXTURES}


@pytest.fixture(scope="session")
def drgs(nets):
    return {name: explore(net) for name, net in nets.items()}


@pytest.fixture(scope="session")
def chains(nets, drgs):
    return {name: ctmc_mod.transition_rate_matrix(nets[name], drgs[name]) for name in FIXTURES}


@pytest.fixture(scope="session")
def phis(chains):
    return {name: ctmc_mod.steady_state(q) for name, q in chains.items()}


@pytest.fixture(scope="session")
def solutions(nets, drgs, chains, phis):
    out = {}
    for name in FIXTURES:
        frm = sfm_mod.fluid_rate_matrix(nets[name], drgs[name])
        out[name] = sfm_mod.spectral_solve(chains[name], frm, phis[name])
    return out


def frac(text) -> Fraction:
    return Fraction(text)

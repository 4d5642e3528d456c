import json
import os
import sys

import numpy as np
import pytest

from setrisk.market import ConicalMarket, cone_from_bid_ask, cone_from_price
from setrisk.tree import ScenarioTree, uniform_tree

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def fixture_path(name):
    return os.path.join(FIXTURES, name)


def bid_ask(a, b=None):
    b = a if b is None else b
    return cone_from_bid_ask([[1.0, a], [b, 1.0]])


@pytest.fixture
def binomial_market():
    """S_0 = (1, 1), S_1 = (1, 2) or (1, 1/2), q = 1/2."""
    tree = ScenarioTree.load(fixture_path("binomial_tree.json"))
    cones = {"r": cone_from_price([1, 1]), "u": cone_from_price([1, 2]),
             "d": cone_from_price([1, 0.5])}
    return ConicalMarket(tree, cones)


@pytest.fixture
def ru_market():
    """One period, two equally likely leaves, no trading, M = span(e1)."""
    tree = uniform_tree(1, 2, 2)
    return ConicalMarket.no_trading(tree, {0: [[1, 0]], 1: [[1, 0]]})


@pytest.fixture
def bidask_market_2():
    """Two-period binary tree with node-dependent bid-ask spreads."""
    tree = ScenarioTree.load(fixture_path("tree2.json"))
    return ConicalMarket.from_dict(tree, load_json("bidask_market.json"))


def random_bidask_market(seed, T=2, branches=2, d=2, spread=(1.05, 1.5)):
    rng = np.random.default_rng(seed)
    tree = uniform_tree(T, branches, d)
    cones = {}
    for n in tree.nodes:
        Pi = np.ones((d, d))
        for i in range(d):
            for j in range(d):
                if i != j:
                    Pi[i, j] = rng.uniform(*spread)
        cones[n] = cone_from_bid_ask(Pi)
    return ConicalMarket(tree, cones)


def load_json(name):
    with open(fixture_path(name)) as fh:
        return json.load(fh)


def pytest_terminal_summary(terminalreporter):
    acc = sys.modules.get("test_acceptance")
    lines = getattr(acc, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda l: int(l.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from setrisk.market import (ConicalMarket, InvalidBidAsk, MarketError, NonpositivePrice,
                            check_robust_no_arbitrage, cone_from_bid_ask, cone_from_price,
                            solvent_eligible_cone, verify_pricing_process)
from setrisk.polytope import Polyhedron, equal, subset
from setrisk.tree import uniform_tree

from conftest import bid_ask, random_bidask_market


def directions(P):
    return {tuple(np.round(r / np.linalg.norm(r), 9)) for r in P.rays.astype(float)}


def unit(v):
    v = np.asarray(v, float)
    return tuple(np.round(v / np.linalg.norm(v), 9))


def test_bid_ask_two_two():
    K = bid_ask(2.0)
    # e^1, e^2 are generators but not extreme, so only the exchange rays survive
    assert directions(K) == {unit((2, -1)), unit((-1, 2))}
    assert equal(K, Polyhedron.from_h([[2, 1], [1, 2]], [0, 0]), 1e-9)
    for e in np.eye(2):
        assert K.contains(e)


def test_frictionless_bid_ask_is_halfspace():
    K = bid_ask(1.0)
    assert equal(K, Polyhedron.from_h([[1, 1]], [0]), 1e-9)


def test_invalid_bid_ask():
    with pytest.raises(InvalidBidAsk):
        cone_from_bid_ask([[1.0, 0.5], [1.0, 1.0]])
    with pytest.raises(InvalidBidAsk):
        cone_from_bid_ask([[1.0, -1.0], [2.0, 1.0]])


def test_cone_from_price():
    assert equal(cone_from_price([1, 1]), Polyhedron.from_h([[1, 1]], [0]), 1e-9)
    assert equal(cone_from_price([1, 2]), Polyhedron.from_h([[1, 2]], [0]), 1e-9)
    with pytest.raises(NonpositivePrice):
        cone_from_price([1, 0])


@settings(max_examples=30, deadline=None)
@given(st.floats(0.2, 5.0), st.floats(0.2, 5.0))
def test_frictionless_ratios_match_price_cone(s1, s2):
    S = np.array([s1, s2])
    Pi = np.array([[1.0, s2 / s1], [s1 / s2, 1.0]])
    assert equal(cone_from_bid_ask(Pi), cone_from_price(S), 1e-8)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 3))
def test_bid_ask_cones_contain_orthant(seed, d):
    rng = np.random.default_rng(seed)
    Pi = np.exp(rng.uniform(0.01, 0.5, size=(d, d)))
    np.fill_diagonal(Pi, 1.0)
    K = cone_from_bid_ask(Pi)
    assert K.is_cone()
    assert subset(Polyhedron.orthant(d), K)
    assert not equal(K, Polyhedron.whole(d))


def test_solvent_eligible_cone_examples():
    tree = uniform_tree(1, 2, 2)
    full = ConicalMarket.uniform(tree, cone_from_price([1, 1]))
    assert equal(solvent_eligible_cone(full, 0, "r"), full.cone("r"))
    axis = Polyhedron.cone([[1, 0]])
    for K in (cone_from_price([1, 1]), bid_ask(2.0)):
        m = ConicalMarket.uniform(tree, K, {0: [[1, 0]], 1: [[1, 0]]})
        C = solvent_eligible_cone(m, 0, "r")
        assert equal(C, axis, 1e-9)
        assert subset(C, K) and subset(C, m.eligible_subspace(0)) and C.is_cone()


def test_market_validation():
    tree = uniform_tree(1, 2, 2)
    with pytest.raises(MarketError):
        ConicalMarket.uniform(tree, Polyhedron.whole(2))
    with pytest.raises(MarketError):
        ConicalMarket.uniform(tree, Polyhedron.from_h([[1, 0]], [0]).translate([1, 0]))
    with pytest.raises(MarketError):
        ConicalMarket(tree, {"r": bid_ask(2.0)})
    with pytest.raises(MarketError):                  # (M)_+ trivial
        ConicalMarket.uniform(tree, bid_ask(2.0), {0: [[1, -1]], 1: [[1, -1]]})


def test_nested_eligible_spaces():
    tree = uniform_tree(2, 2, 2)
    m = ConicalMarket.uniform(tree, bid_ask(2.0), {0: [[1, 0]], 1: [[1, 0]], 2: None})
    assert m.nested
    m2 = ConicalMarket.uniform(tree, bid_ask(2.0), {0: None, 1: [[1, 0]], 2: None})
    assert not m2.nested


def test_na_certificate_binomial(binomial_market):
    cert = check_robust_no_arbitrage(binomial_market)
    assert cert.ok
    Z = cert.Z
    assert verify_pricing_process(binomial_market, Z)
    # frictionless: Z is parallel to prices, and the implied measure is q = 1/3 on up
    assert Z["u"][1] / Z["u"][0] == pytest.approx(2.0, rel=1e-7)
    assert Z["d"][1] / Z["d"][0] == pytest.approx(0.5, rel=1e-7)
    assert 0.5 * Z["u"][0] / Z["r"][0] == pytest.approx(1 / 3, abs=1e-7)


def test_na_certificate_bid_ask_iid():
    tree = uniform_tree(2, 2, 2)
    m = ConicalMarket.uniform(tree, bid_ask(2.0))
    cert = check_robust_no_arbitrage(m)
    assert cert.ok and verify_pricing_process(m, cert.Z)
    ones = {n: np.array([0.5, 0.5]) for n in tree.nodes}
    assert verify_pricing_process(m, ones)


def test_na_fails_for_arbitrage_market():
    # asset 2 costs 1 at the root and pays 2 or 3 after: buying it is an arbitrage
    tree = uniform_tree(1, 2, 2)
    cones = {"r": cone_from_price([1, 1]), "0": cone_from_price([1, 2]),
             "1": cone_from_price([1, 3])}
    m = ConicalMarket(tree, cones)
    assert not check_robust_no_arbitrage(m).ok


def test_pricing_process_rejects_bad_z(binomial_market):
    Z = check_robust_no_arbitrage(binomial_market).Z
    bad = dict(Z)
    bad["u"] = np.array([1.0, 0.0])
    assert not verify_pricing_process(binomial_market, bad)
    zero = dict(Z)
    zero["d"] = np.zeros(2)
    assert not verify_pricing_process(binomial_market, zero)


def test_market_round_trip():
    m = random_bidask_market(5)
    again = ConicalMarket.from_dict(m.tree, m.to_dict())
    for n in m.tree.nodes:
        assert equal(m.cone(n), again.cone(n), 1e-9)


@pytest.mark.parametrize("seed", range(5))
def test_random_bidask_markets_certified(seed):
    m = random_bidask_market(seed, T=2, branches=3, d=3)
    cert = check_robust_no_arbitrage(m)
    assert cert.ok and verify_pricing_process(m, cert.Z)

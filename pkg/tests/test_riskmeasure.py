from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from setrisk.market import ConicalMarket
from setrisk.polytope import Polyhedron, equal, subset, support
from setrisk.riskmeasure import (AVaR, BadLambda, Superhedging, WorstCase, acceptance_from_risk,
                                 avar, check_axioms, leafwise_acceptance, normalize,
                                 random_claims, risk_from_acceptance, shp, worst_case)
from setrisk.tree import AdaptedVector, ScenarioTree, cond_expectation_P, uniform_tree

from conftest import bid_ask, fixture_path, load_json, random_bidask_market

TOL = 1e-8


def digital(tree):
    return AdaptedVector.from_dict(tree, 1, {"u": [1, 0], "d": [0, 0]})


def test_binomial_superhedging_price(binomial_market):
    S0 = shp(digital(binomial_market.tree), binomial_market)[0]["r"]
    # LP oracle: min u1 + u2 s.t. u1 + 2 u2 >= 1, u1 + u2/2 >= 0
    assert support(S0, [1, 1]) == pytest.approx(1 / 3, abs=1e-9)
    assert equal(S0, Polyhedron.from_h([[1, 1]], [1 / 3]), 1e-9)


def test_binomial_superhedging_exact():
    tree = ScenarioTree.load(fixture_path("binomial_tree.json"))
    half = Fraction(1, 2)
    cones = {n: Polyhedron.from_h([S], [0], exact=True)
             for n, S in {"r": [1, 1], "u": [1, 2], "d": [1, half]}.items()}
    m = ConicalMarket(tree, cones)
    X = {"u": [Fraction(1), Fraction(0)], "d": [Fraction(0), Fraction(0)]}
    S0 = shp(digital(tree), m, exact_values=X)[0]["r"]
    assert S0.exact
    assert support(S0, [1, 1]) == Fraction(1, 3)


def test_shp_of_zero_contains_cone(bidask_market_2):
    m = bidask_market_2
    zero = AdaptedVector.constant(m.tree, m.tree.T, [0.0, 0.0])
    for t, S in enumerate(shp(zero, m)):
        for g, P in S.items():
            assert P.contains([0, 0]) and subset(m.cone(g), P)


def test_shp_translativity_with_constant(bidask_market_2):
    m = bidask_market_2
    X = random_claims(m.tree, 1, seed=3)[0]
    c = np.array([0.7, -0.3])
    base = shp(X, m)[0]["r"]
    shifted = shp(X + AdaptedVector.constant(m.tree, m.tree.T, c), m)[0]["r"]
    assert equal(shifted, base.translate(c), TOL)


def test_superhedging_measure_orientation(binomial_market):
    # R_0(X) = SHP_0(-X): holding the digital is worth at least its bid
    R = Superhedging(binomial_market).evaluate(digital(binomial_market.tree), 0)["r"]
    assert equal(R, Polyhedron.from_h([[1, 1]], [-1 / 3]), 1e-9)


def test_worst_case_examples():
    tree = uniform_tree(1, 2, 2)
    m = ConicalMarket.uniform(tree, bid_ask(2.0))
    X = AdaptedVector(tree, 1, [[1, -2], [-3, 4]])
    R = worst_case(X, 0, m)["r"]
    assert equal(R, Polyhedron.from_h(np.eye(2), [3, 2]), TOL)
    R0 = worst_case(np.zeros((2, 2)), 0, m)["r"]
    assert equal(R0, Polyhedron.orthant(2), TOL)


def test_worst_case_acceptance_is_orthant():
    tree = uniform_tree(2, 2, 2)
    m = ConicalMarket.uniform(tree, bid_ask(2.0))
    A = acceptance_from_risk(WorstCase(m), 0)
    assert A.form == "orthant"
    assert A.contains(np.abs(np.random.default_rng(0).normal(size=(4, 2))))
    assert not A.contains(-np.ones((4, 2)))


def test_acceptance_route_on_axis(ru_market):
    tree = ru_market.tree
    A = leafwise_acceptance(ru_market, {0: Polyhedron.from_h([[1, 0]], [0]),
                                        1: Polyhedron.from_h([[1, 0]], [0])})
    X = AdaptedVector(tree, 1, [[-1, 0], [2, 0]])
    P = risk_from_acceptance(A, X, 0)["r"]
    axis_from_one = Polyhedron.from_v([[1, 0]], [[1, 0]])
    assert equal(P, axis_from_one, 1e-7)


def test_accepted_claim_has_zero_risk(bidask_market_2):
    m = bidask_market_2
    X = AdaptedVector.constant(m.tree, m.tree.T, [0.5, 0.5])
    for meas in (Superhedging(m), WorstCase(m), AVaR(m, 0.5)):
        assert meas.evaluate(X, 0)["r"].contains([0, 0])


def test_avar_expectation_case(bidask_market_2):
    m = bidask_market_2
    X = AdaptedVector.from_dict(m.tree, 2, load_json("claim2.json")["X"])
    for t in range(3):
        E = cond_expectation_P(X, t)
        R = avar(X, 1.0, t, m)
        for g, P in R.items():
            assert equal(P, Polyhedron.from_h(np.eye(2), -E[g]), TOL)


def test_avar_scalar_reduction(ru_market):
    tree = ru_market.tree
    X = AdaptedVector(tree, 1, [[-1, 0], [1, 0]])
    P = avar(X, [0.5, 1.0], 0, ru_market)["r"]
    assert equal(P, Polyhedron.from_v([[1, 0]], [[1, 0]]), TOL)


def ru_oracle(x, p, lam):
    """Lower-tail mean: AV@R_lam(x) = -(1/lam) * integral of the quantile over (0, lam)."""
    order = np.argsort(x)
    x, p = np.asarray(x, float)[order], np.asarray(p, float)[order]
    left, acc = lam, 0.0
    for xi, pi in zip(x, p):
        take = min(pi, left)
        acc += take * xi
        left -= take
        if left <= 1e-15:
            break
    return -acc / lam


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.05, 1.0))
def test_avar_matches_sorting_oracle(seed, lam):
    rng = np.random.default_rng(seed)
    m = random_bidask_market(seed % 7, T=2, branches=2)
    X = AdaptedVector(m.tree, 2, np.round(rng.normal(size=(4, 2)), 4))
    R = avar(X, lam, 0, m)["r"]
    for i in range(2):
        e = np.eye(2)[i]
        assert support(R, e) == pytest.approx(ru_oracle(X.values[:, i], m.tree.leaf_prob, lam),
                                              abs=1e-8)


def test_avar_fast_path_matches_projection(bidask_market_2):
    m = bidask_market_2
    meas = AVaR(m, {"r": [0.5, 0.5], "a": [0.5, 1.0], "b": [0.75, 0.5]})
    for X in random_claims(m.tree, 4, seed=11):
        for t in (0, 1):
            assert meas.evaluate(X, t).equal(risk_from_acceptance(meas, X, t), 1e-7)


def test_avar_market_compatible_adds_cone(bidask_market_2):
    m = bidask_market_2
    X = random_claims(m.tree, 1, seed=2)[0]
    plain = avar(X, 0.5, 0, m)["r"]
    mc = avar(X, 0.5, 0, m, market_compatible=True)["r"]
    assert subset(plain, mc) and not subset(mc, plain)


def test_bad_lambda(bidask_market_2):
    with pytest.raises(BadLambda):
        AVaR(bidask_market_2, 1.5)
    with pytest.raises(BadLambda):
        AVaR(bidask_market_2, {"r": [0.0, 0.5]})


def test_normalization_examples(bidask_market_2):
    m = bidask_market_2
    sh = Superhedging(m)
    zero = AdaptedVector.constant(m.tree, m.tree.T, [0.0, 0.0])
    X = random_claims(m.tree, 1, seed=1)[0]
    RX, R0 = sh.evaluate(X, 0), sh.evaluate(zero, 0)
    assert normalize(RX, R0).equal(RX, TOL)
    tree = uniform_tree(1, 2, 2)
    m2 = ConicalMarket.uniform(tree, bid_ask(2.0))
    u0 = np.array([0.5, -1.0])
    Xc = AdaptedVector.constant(tree, 1, -u0)
    W, W0 = worst_case(Xc, 0, m2), worst_case(np.zeros((2, 2)), 0, m2)
    N = normalize(W, W0)["r"]
    assert equal(N, Polyhedron.orthant(2).translate(u0), TOL)
    N0 = normalize(W0, W0)["r"]
    assert subset(Polyhedron.orthant(2), N0)
    assert not N0.contains([-1e-3, -1e-3])


def failing_axioms(report, names):
    return {n: report[n]["verdict"] for n in names if report[n]["verdict"] != "holds"}


def test_shp_axioms(bidask_market_2):
    claims = random_claims(bidask_market_2.tree, 10, seed=7)
    rep = check_axioms(Superhedging(bidask_market_2), claims, 0, tol=TOL)
    assert not failing_axioms(rep, ["translativity", "monotonicity", "conditional_coherence",
                                 "market_compatibility", "normalization", "finite_at_zero"])


def test_avar_axioms(bidask_market_2):
    claims = random_claims(bidask_market_2.tree, 10, seed=8)
    rep = check_axioms(AVaR(bidask_market_2, 0.5), claims, 1, tol=TOL)
    assert not failing_axioms(rep, ["conditional_coherence", "normalization", "translativity",
                                 "monotonicity"])
    # without the cone, AV@R is not market-compatible under frictions
    assert rep["market_compatibility"]["verdict"] == "fails"


def test_worst_case_axioms(bidask_market_2):
    claims = random_claims(bidask_market_2.tree, 10, seed=9)
    rep = check_axioms(WorstCase(bidask_market_2), claims, 0, tol=TOL)
    assert not failing_axioms(rep, ["coherence", "normalization", "subadditivity"])


def test_axiom_checker_detects_nonnormalized(ru_market):
    A = leafwise_acceptance(ru_market, {0: Polyhedron.from_h([[1, 0]], [1]),
                                        1: Polyhedron.from_h([[1, 0]], [1])})
    claims = random_claims(ru_market.tree, 3, seed=1, market=ru_market)
    rep = check_axioms(A, claims, 0, tol=TOL, axioms=["normalization", "positive_homogeneity"])
    assert rep["normalization"]["verdict"] == "fails"
    assert rep["positive_homogeneity"]["verdict"] == "fails"
    assert rep["positive_homogeneity"]["witness"] is not None


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 1000))
def test_monotonicity_property(seed):
    m = random_bidask_market(seed % 5, T=1, branches=3)
    rng = np.random.default_rng(seed)
    X = AdaptedVector(m.tree, 1, rng.normal(size=(3, 2)))
    Y = X + np.abs(rng.normal(size=(3, 2)))
    for meas in (Superhedging(m), WorstCase(m), AVaR(m, 0.4)):
        assert subset(meas.evaluate(X, 0)["r"], meas.evaluate(Y, 0)["r"], TOL)


def test_aggregate_axioms_pull_in_their_parts(bidask_market_2):
    claims = random_claims(bidask_market_2.tree, 2, seed=3)
    rep = check_axioms(WorstCase(bidask_market_2), claims, 0, tol=TOL, axioms=["coherence"])
    assert rep["coherence"]["verdict"] == "holds"
    assert {"convexity", "positive_homogeneity"} <= set(rep)

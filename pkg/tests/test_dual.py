import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from setrisk.dual import (DualPair, NegativeY, OrthogonalV, PricingProcess, ConeViolation,
                          avar_dual_membership, avar_pair_sampler, bilinear_gap, cpp_from_pair,
                          conditional_halfspace, dirichlet_pairs, facet_certificates, min_penalty,
                          pair_from_cpp, penalized_halfspace, qw_from_yv, shp_facet_certificates,
                          shp_pair_sampler, verify_dual_representation, yv_from_qw)
from setrisk.market import ConicalMarket, check_robust_no_arbitrage
from setrisk.polytope import Polyhedron, equal, support
from setrisk.riskmeasure import (AVaR, Superhedging, WorstCase, leafwise_acceptance,
                                 random_claims)
from setrisk.tree import AdaptedVector, VectorDensity, random_tree, uniform_tree

from conftest import bid_ask, random_bidask_market


@pytest.fixture(scope="module")
def small_market():
    return random_bidask_market(3, T=1, branches=2)


def test_uniform_y_gives_p():
    tree = uniform_tree(2, 2, 2)
    pair = qw_from_yv(tree, np.ones((4, 2)))
    assert np.allclose(pair.Q.density, 1.0)
    assert np.allclose(pair.w, 1.0)
    assert not pair.arbitrary.any() and pair.is_valid()


def test_zero_mean_component_is_flagged():
    tree = uniform_tree(1, 2, 2)
    Y = np.array([[1.0, 0.0], [3.0, 0.0]])
    pair = qw_from_yv(tree, Y)
    assert list(pair.arbitrary) == [False, True]
    assert np.allclose(pair.Q.density[:, 1], 1.0)
    assert np.allclose(pair.Q.density[:, 0], [0.5, 1.5])


def test_transform_errors():
    tree = uniform_tree(1, 2, 2)
    with pytest.raises(NegativeY):
        qw_from_yv(tree, [[-1.0, 1.0], [1.0, 1.0]])
    with pytest.raises(OrthogonalV):
        qw_from_yv(tree, np.ones((2, 2)), v=[[1.0, 2.0]])
    m = ConicalMarket.uniform(tree, bid_ask(2.0), {0: [[1, 0]], 1: None})
    Y = np.array([[0.0, 1.0], [0.0, 1.0]])
    with pytest.raises(OrthogonalV):
        qw_from_yv(tree, Y, v=[[0.0, 1.0]], market=m)


@st.composite
def tree_y_claim(draw):
    seed = draw(st.integers(0, 100_000))
    rng = np.random.default_rng(seed)
    T = draw(st.integers(1, 3))
    tree = random_tree(rng, T, 3, draw(st.integers(1, 3)))
    t = draw(st.integers(0, T))
    Y = rng.exponential(size=(len(tree.leaves), tree.d))
    X = AdaptedVector(tree, T, rng.normal(size=Y.shape))
    return tree, t, Y, X


@settings(max_examples=40, deadline=None)
@given(tree_y_claim())
def test_bilinear_identity_and_round_trip(data):
    tree, t, Y, X = data
    pair = qw_from_yv(tree, Y, t=t)
    assert bilinear_gap(pair, Y, X) <= 1e-9 * max(1.0, np.abs(Y).max() * np.abs(X.values).max())
    Y2, v2 = yv_from_qw(pair)
    assert np.allclose(Y2, Y, atol=1e-10)
    assert np.allclose(v2, pair.w)
    again = qw_from_yv(tree, Y2, v2, t=t)
    assert np.allclose(again.ratio(), pair.ratio(), atol=1e-10)


def test_pair_serialization():
    tree = uniform_tree(2, 2, 2)
    pair = dirichlet_pairs(tree, 1, 1, np.random.default_rng(0))[0]
    back = DualPair.from_dict(tree, pair.to_dict())
    assert back.t == 1 and np.allclose(back.w, pair.w)
    assert np.allclose(back.Q.density, pair.Q.density)


def test_conditional_halfspace_examples():
    tree = uniform_tree(1, 2, 2)
    m = ConicalMarket.uniform(tree, bid_ask(2.0), {0: [[1, 0]], 1: None})
    P = qw_from_yv(tree, np.ones((2, 2)))
    H0 = conditional_halfspace(P, np.zeros((2, 2)), m)["r"]
    assert equal(H0, Polyhedron.from_v([[0, 0]], [[1, 0]]), 1e-9)
    c = np.array([0.3, -1.2])
    Hc = conditional_halfspace(P, AdaptedVector.constant(tree, 1, c))["r"]
    assert equal(Hc, Polyhedron.from_h([[1, 1]], [c.sum()]), 1e-9)


def test_min_penalty_examples(ru_market):
    tree = ru_market.tree
    P = qw_from_yv(tree, np.ones((2, 2)))
    wc = WorstCase(ru_market)
    assert min_penalty(P, wc)["r"] == pytest.approx(0.0, abs=1e-12)
    e1 = qw_from_yv(tree, [[1.0, 0.0], [1.0, 0.0]])
    A = leafwise_acceptance(ru_market, {0: Polyhedron.from_h([[1, 0]], [1]),
                                        1: Polyhedron.from_h([[1, 0]], [1])})
    assert min_penalty(e1, A)["r"] == pytest.approx(1.0, abs=1e-9)


def test_min_penalty_of_cone_is_zero_or_improper(small_market):
    sh = Superhedging(small_market)
    tree = small_market.tree
    na = check_robust_no_arbitrage(small_market)
    inside = qw_from_yv(tree, np.array([na.Z[h] for h in tree.leaves]))
    assert min_penalty(inside, sh)["r"] == pytest.approx(0.0, abs=1e-9)
    outside = qw_from_yv(tree, [[1.0, 0.0], [1.0, 0.0]])        # e^1 is not a price
    assert min_penalty(outside, sh)["r"] == -np.inf


def test_penalized_halfspace_matches_formula(small_market):
    sh = Superhedging(small_market)
    tree = small_market.tree
    na = check_robust_no_arbitrage(small_market)
    pair = qw_from_yv(tree, np.array([na.Z[h] for h in tree.leaves]))
    X = random_claims(tree, 1, seed=0)[0]
    w, rhs = penalized_halfspace(pair, sh, X)["r"]
    expect = float(w @ -(pair.ratio() * tree.leaf_prob[:, None] * X.values).sum(0))
    assert rhs == pytest.approx(expect, abs=1e-9)


def test_avar_membership_examples():
    tree = uniform_tree(1, 4, 2)
    ones = qw_from_yv(tree, np.ones((4, 2)))
    assert avar_dual_membership(ones, 1.0)
    assert avar_dual_membership(ones, [0.3, 0.7])
    q = np.full((4, 2), 0.25)
    q[0, 0] = 0.75
    q[1:, 0] = 0.25 / 3
    Q = VectorDensity.from_measures(tree, q)
    pair = DualPair(Q, [[1.0, 1.0]], 0)
    assert pair.ratio()[0, 0] == pytest.approx(3.0)
    assert not avar_dual_membership(pair, [0.5, 1.0])           # 2 < 3
    assert avar_dual_membership(pair, [0.25, 1.0])              # 4 >= 3
    assert not avar_dual_membership(pair, 1.0)                  # 1 < 3
    zero_w = DualPair(Q, [[0.0, 1.0]], 0)
    assert avar_dual_membership(zero_w, [0.5, 1.0])             # w_1 = 0 switches it off


def test_cpp_from_binomial_certificate(binomial_market):
    tree = binomial_market.tree
    na = check_robust_no_arbitrage(binomial_market)
    Z = PricingProcess({k: np.asarray(v) for k, v in na.Z.items()})
    assert Z.validate(binomial_market)
    pair = pair_from_cpp(Z, tree, 0, binomial_market)
    w = pair.w[0]
    assert w[0] == pytest.approx(w[1], rel=1e-7)
    back = cpp_from_pair(pair, binomial_market)
    for n in tree.nodes:
        assert np.allclose(back.Z[n], Z.Z[n], atol=1e-9)


def test_constant_cpp_gives_p():
    tree = uniform_tree(2, 2, 2)
    m = ConicalMarket.uniform(tree, bid_ask(2.0))
    Z = PricingProcess({n: np.array([1.0, 1.0]) for n in tree.nodes})
    pair = pair_from_cpp(Z, tree, 0, m)
    assert np.allclose(pair.Q.density, 1.0) and np.allclose(pair.w, 1.0)


def test_cone_violation():
    tree = uniform_tree(1, 2, 2)
    m = ConicalMarket.uniform(tree, bid_ask(2.0))
    pair = qw_from_yv(tree, [[1.0, 0.1], [1.0, 0.1]])           # (1, 0.1) misses (-1, 2)
    with pytest.raises(ConeViolation):
        cpp_from_pair(pair, m)


def test_pair_cpp_round_trip_random():
    m = random_bidask_market(1, T=2, branches=2)
    tree = m.tree
    na = check_robust_no_arbitrage(m)
    Z = PricingProcess({k: np.asarray(v) for k, v in na.Z.items()})
    for t in range(3):
        pair = pair_from_cpp(Z, tree, t, m)
        Z2 = cpp_from_pair(pair, m)
        pair2 = pair_from_cpp(Z2, tree, t, m)
        assert np.allclose(pair2.ratio(), pair.ratio(), atol=1e-10)
        assert np.allclose(pair2.w, pair.w, atol=1e-10)


def test_binomial_facet_certificate(binomial_market):
    X = -AdaptedVector.from_dict(binomial_market.tree, 1, {"u": [1, 0], "d": [0, 0]})
    certs = shp_facet_certificates(binomial_market, X, 0)
    assert len(certs) == 1
    c = certs[0]
    assert c["certified"] and c["cpp_valid"] and c["normal_aligned"]
    z0 = np.asarray(c["Z"]["r"])
    assert z0[0] == pytest.approx(z0[1], rel=1e-7)


def test_shp_certificates_cover_all_facets(bidask_market_2):
    for X in random_claims(bidask_market_2.tree, 2, seed=13):
        for t in (0, 1):
            certs = shp_facet_certificates(bidask_market_2, X, t)
            assert certs and all(c["certified"] and c["cpp_valid"] for c in certs)


def test_conditional_conicality_of_certificates(bidask_market_2):
    sh = Superhedging(bidask_market_2)
    X = random_claims(bidask_market_2.tree, 1, seed=21)[0]
    R = sh.evaluate(X, 1)
    rng = np.random.default_rng(0)
    for cert, pair in facet_certificates(sh, X, 1, values=R):
        g = cert["node"]
        f = rng.uniform(0.2, 5.0, size=len(pair.w))
        scaled = pair.rescale(f)
        w, rhs = penalized_halfspace(scaled, sh, X)[g]
        scale = max(1.0, np.abs(w).max())
        assert abs(support(R[g], w) - rhs) <= 1e-7 * scale


def test_dual_verification_shp(small_market):
    claims = random_claims(small_market.tree, 3, seed=2)
    pairs = shp_pair_sampler(small_market, claims[:1], 0, 40, seed=1)
    rep = verify_dual_representation(Superhedging(small_market), claims, pairs, 0)
    assert rep["verdict"] == "holds"
    assert rep["outer"]["checks"] > 0 and not rep["outer"]["violations"]
    assert rep["inner"]["coverage"] == 1.0


def test_dual_verification_avar(bidask_market_2):
    meas = AVaR(bidask_market_2, 0.5)
    pairs = avar_pair_sampler(meas, 0, 20, seed=3)
    assert len(pairs) == 20
    assert all(avar_dual_membership(p, meas) for p in pairs)
    claims = random_claims(bidask_market_2.tree, 3, seed=4)
    rep = verify_dual_representation(meas, claims, pairs, 0)
    assert rep["verdict"] == "holds", rep["outer"]["violations"][:3]


def test_dual_verification_worst_case(small_market):
    wc = WorstCase(small_market)
    pairs = dirichlet_pairs(small_market.tree, 20, 0, np.random.default_rng(5))
    assert all(min_penalty(p, wc)["r"] == pytest.approx(0.0, abs=1e-9) for p in pairs)
    claims = random_claims(small_market.tree, 3, seed=6)
    assert verify_dual_representation(wc, claims, pairs, 0)["verdict"] == "holds"


def test_pairs_outside_dual_set_are_improper(small_market):
    # for the expectation measure only Q = P survives; other pairs get beta = -inf,
    # and forcing beta = 0 produces a halfspace the primal set violates
    meas = AVaR(small_market, 1.0)
    tree = small_market.tree
    bad = qw_from_yv(tree, [[3.0, 3.0], [0.2, 0.2]])
    assert not avar_dual_membership(bad, meas)
    assert min_penalty(bad, meas)["r"] == -np.inf
    violated = 0
    for X in random_claims(tree, 6, seed=7):
        R = meas.evaluate(X, 0)["r"]
        w, rhs = penalized_halfspace(bad, meas, X, beta={"r": 0.0})["r"]
        violated += support(R, w) < rhs - 1e-7
    assert violated > 0

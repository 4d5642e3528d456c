"""Time consistency, multi-portfolio time consistency and backward composition.

Universally quantified properties are checked on explicit seeded families; a
``holds`` verdict means no counterexample was found, a ``fails`` verdict
always carries a witness that can be re-evaluated.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from .market import solvent_eligible_cone
from .parallel import pmap
from .polytope import Lifted, Polyhedron, TOL_GEO, equal, minkowski_sum, subset, subset_witness
from .riskmeasure import (NotRepresentable, RandomSet, RiskMeasure, check_axioms, eligible_equalities,
                          measurable_equalities, random_claims, replicate, sub_positions)
from .tree import AdaptedVector, as_claim

log = logging.getLogger(__name__)

SELECTION_CAP = 10**4


class HypothesisViolated(RuntimeError):
    def __init__(self, message, hypotheses=None):
        super().__init__(message)
        self.hypotheses = dict(hypotheses or {})


@dataclass
class ConsistencyReport:
    property: str
    verdict: str                      # holds | fails | not-applicable | hypothesis-violated
    witness: dict | None = None
    hypotheses: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.verdict == "holds"

    def to_dict(self) -> dict:
        return {"property": self.property, "verdict": self.verdict,
                "witness": _jsonable(self.witness), "hypotheses": _jsonable(self.hypotheses),
                "details": _jsonable(self.details)}


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _times(measure, t):
    return range(measure.tree.T) if t is None else [t]


def _claim_from_block(tree, nid, block):
    """Full terminal claim equal to ``block`` (stacked) below nid, zero elsewhere."""
    V = np.zeros((len(tree.leaves), tree.d))
    V[tree.leaves_under(nid)] = np.asarray(block, float).reshape(-1, tree.d)
    return AdaptedVector(tree, tree.T, V)


# ---------------------------------------------------------------------------
# acceptance decomposition
# ---------------------------------------------------------------------------

def one_step_acceptance(measure: RiskMeasure, t: int, nid: str) -> Lifted:
    """A_{t,t+1}^{M_{t+1}} below nid: A_t with F_{t+1}-measurable M_{t+1}-valued claims."""
    tree, market = measure.tree, measure.market
    A = measure.acceptance(t, nid)
    E = np.vstack([measurable_equalities(tree, nid, t + 1),
                   eligible_equalities(tree, market, nid, t + 1)])
    return A.with_equalities(E) if len(E) else A


def _witness_point(P: Polyhedron, Q: Polyhedron, w: dict):
    """A point of P outside Q from a subset witness (vertex, or vertex plus ray)."""
    if "point" in w:
        return np.asarray(w["point"], float)
    if "ray" in w:
        r = np.asarray(w["ray"], float)
        for v in P.vertices.astype(float):
            for s in 10.0 ** np.arange(0, 9):
                x = v + s * r
                if not Q.contains(x, 1e-7):
                    return x
    return None


def check_acceptance_decomposition(measure: RiskMeasure, t: int | None = None,
                                   tol: float = 1e-7) -> ConsistencyReport:
    """Two-sided test of A_t = A_{t+1} + A_{t,t+1}^{M_{t+1}} node by node."""
    market = measure.market
    hyp = {"nested_eligible": market.nested}
    if not market.nested:
        raise HypothesisViolated("decomposition check needs M_t within M_{t+1}", hyp)
    tree = measure.tree
    details = {}
    for s in _times(measure, t):
        for g in tree.layer(s):
            A = measure.acceptance(s, g)
            S = measure.acceptance_at(s + 1, g).minkowski_sum(one_step_acceptance(measure, s, g))
            PA = A.to_polyhedron()
            PS = S.to_polyhedron()
            details[f"{s}:{g}"] = {"facets_A": len(PA.A), "facets_sum": len(PS.A)}
            for name, P, Q in (("A_t not in sum", PA, PS), ("sum not in A_t", PS, PA)):
                if not subset(P, Q, tol):
                    w = subset_witness(P, Q, tol) or {}
                    claim = None
                    pt = _witness_point(P, Q, w)
                    if pt is not None:
                        claim = _claim_from_block(tree, g, pt).to_dict()
                    witness = {"t": s, "node": g, "direction": name, "claim": claim, **w}
                    return ConsistencyReport("acceptance_decomposition", "fails", witness,
                                             hyp, details)
    return ConsistencyReport("acceptance_decomposition", "holds", None, hyp, details)


# ---------------------------------------------------------------------------
# recursion
# ---------------------------------------------------------------------------

def _selection_iter(options, cap, rng):
    total = 1
    for o in options:
        total *= len(o)
    if total <= cap:
        yield from itertools.product(*options)
        return
    for _ in range(cap):
        yield tuple(o[int(rng.integers(len(o)))] for o in options)


def _union_lifted(measure, t, g, R1: RandomSet) -> Lifted:
    """{u : exists Z F_{t+1}-measurable, Z(h) in R_{t+1}(X)(h), u - Z in A_t(g)}."""
    tree, d = measure.tree, measure.tree.d
    A = measure.acceptance(t, g)
    ch = tree.children(g)
    nz = d * len(ch)
    n = A.n
    # x-coordinates: u (d); auxiliary: Z (nz) then A's auxiliaries
    E = np.zeros((n, nz))
    for k, h in enumerate(ch):
        pos = sub_positions(tree, g, h)
        E[pos, k * d:(k + 1) * d] = np.tile(np.eye(d), (len(pos) // d, 1))
    Rep = replicate(tree, g)
    # claim seen by A is u*rep - E Z
    Ax = A.Ax @ Rep
    Ay = np.hstack([-A.Ax @ E, A.Ay])
    Ex = A.Ex @ Rep
    Ey = np.hstack([-A.Ex @ E, A.Ey])
    rows_y, rows_b = [], []
    for k, h in enumerate(ch):
        P = R1[h]
        if P.is_empty:
            return Lifted.empty(d)
        blk = np.zeros((len(P.A), nz + A.k))
        blk[:, k * d:(k + 1) * d] = P.A.astype(float)
        rows_y.append(blk)
        rows_b.append(P.b.astype(float))
    Ay_all = np.vstack([Ay] + rows_y)
    Ax_all = np.vstack([Ax, np.zeros((sum(len(b) for b in rows_b), d))])
    b_all = np.concatenate([A.b] + rows_b)
    out = Lifted(d, nz + A.k, Ax_all, Ay_all, b_all, Ex, Ey, A.e)
    N = measure.market.eligible_complement(t)
    return out.with_equalities(N) if len(N) else out


def check_recursion(measure: RiskMeasure, claims, t: int | None = None, tol: float = 1e-7,
                    cap: int = SELECTION_CAP, seed=42) -> ConsistencyReport:
    """R_t(X) = union over Z in R_{t+1}(X) of R_t(-Z), tested one side at a time.

    superset side: R_t(-Z) within R_t(X) for vertex selections Z of R_{t+1}(X);
    subset side: every vertex (and recession direction) of R_t(X) is reachable
    through a feasible Z, decided by LP.
    """
    rng = np.random.default_rng(seed)
    tree = measure.tree
    claims = [as_claim(tree, X) for X in claims]
    sides = {"superset": {"verdict": "holds", "witness": None, "checked": 0},
             "subset": {"verdict": "holds", "witness": None, "checked": 0}}
    for s in _times(measure, t):
        for k, X in enumerate(claims):
            R0 = measure.evaluate(X, s)
            R1 = measure.evaluate(X, s + 1)
            for g in tree.layer(s):
                ch = tree.children(g)
                opts = [list(R1[h].vertices.astype(float)) for h in ch]
                sup = sides["superset"]
                if sup["verdict"] == "holds" and all(len(o) for o in opts):
                    for sel in _selection_iter(opts, cap, rng):
                        Zc = np.zeros((len(tree.leaves), tree.d))
                        for h, z in zip(ch, sel):
                            Zc[tree.leaves_under(h)] = z
                        P = measure.node_value(AdaptedVector(tree, tree.T, -Zc), s, g)
                        sup["checked"] += 1
                        if not subset(P, R0[g], tol):
                            sup["verdict"] = "fails"
                            sup["witness"] = {"t": s, "claim_index": k, "node": g,
                                              "claim": X.to_dict(),
                                              "selection": {h: z.tolist() for h, z in zip(ch, sel)}}
                            break
                sub = sides["subset"]
                if sub["verdict"] == "holds" and not R0[g].is_empty:
                    try:
                        U = _union_lifted(measure, s, g, R1)
                    except NotRepresentable:
                        sub["verdict"] = "not-applicable"
                        continue
                    P = R0[g]
                    for v in P.vertices.astype(float):
                        sub["checked"] += 1
                        if U.is_empty() or not U.contains(v, tol):
                            sub["verdict"] = "fails"
                            sub["witness"] = {"t": s, "claim_index": k, "node": g,
                                              "claim": X.to_dict(), "vertex": v.tolist()}
                            break
                    if sub["verdict"] == "holds":
                        for r in P.rays.astype(float):
                            sub["checked"] += 1
                            if not U.recedes(r, tol):
                                sub["verdict"] = "fails"
                                sub["witness"] = {"t": s, "claim_index": k, "node": g,
                                                  "claim": X.to_dict(), "ray": r.tolist()}
                                break
    verdicts = [v["verdict"] for v in sides.values()]
    verdict = "fails" if "fails" in verdicts else "holds"
    witness = None
    if verdict == "fails":
        side = "subset" if sides["subset"]["verdict"] == "fails" else "superset"
        witness = {"side": side, **sides[side]["witness"]}
    return ConsistencyReport("recursion", verdict, witness,
                             {"nested_eligible": measure.market.nested}, sides)


# ---------------------------------------------------------------------------
# time consistency
# ---------------------------------------------------------------------------

def tc_pairs(tree, n: int, seed=42, market=None):
    """Pairs (X, Y) mixing positive perturbations, signed perturbations and Y = X."""
    rng = np.random.default_rng(seed)
    base = random_claims(tree, n, rng, market=market)
    pairs = []
    for k, X in enumerate(base):
        kind = k % 3
        if kind == 0:
            D = np.abs(rng.normal(size=X.values.shape))
        elif kind == 1:
            D = rng.normal(size=X.values.shape)
        else:
            D = np.zeros(X.values.shape)
        if market is not None and not market.is_full(tree.T):
            D = market.project_eligible(tree.T, D)
        pairs.append((X, X + np.round(D, 6)))
    return pairs


def check_time_consistency(measure: RiskMeasure, pairs, t: int | None = None,
                           tol: float = TOL_GEO) -> ConsistencyReport:
    """R_{t+1}(X) within R_{t+1}(Y) implies R_t(X) within R_t(Y) on the pairs."""
    tree = measure.tree
    pairs = [(as_claim(tree, X), as_claim(tree, Y)) for X, Y in pairs]
    jobs = [(s, k) for s in _times(measure, t) for k in range(len(pairs))]

    def one(job):
        s, k = job
        X, Y = pairs[k]
        if not measure.evaluate(X, s + 1).subset(measure.evaluate(Y, s + 1), tol):
            return False, None
        return True, measure.evaluate(X, s).subset_witness(measure.evaluate(Y, s), tol)

    results = pmap(one, jobs)
    details = {"tested": len(jobs), "premise_held": sum(r[0] for r in results)}
    for (s, k), (_, w) in zip(jobs, results):
        if w:
            X, Y = pairs[k]
            return ConsistencyReport("time_consistency", "fails",
                                     {"t": s, "pair": k, "X": X.to_dict(), "Y": Y.to_dict(), **w},
                                     {}, details)
    return ConsistencyReport("time_consistency", "holds", None, {}, details)


# ---------------------------------------------------------------------------
# multi-portfolio time consistency
# ---------------------------------------------------------------------------

def check_mptc(measure: RiskMeasure, claims=None, tol: float = 1e-7) -> ConsistencyReport:
    """Multi-portfolio time consistency through the acceptance decomposition."""
    rep = check_acceptance_decomposition(measure, None, tol)
    rep.property = "mptc"
    return rep


# ---------------------------------------------------------------------------
# backward composition
# ---------------------------------------------------------------------------

class ComposedRisk(RiskMeasure):
    """Backward composition: A~_T = A_T and A~_t = A~_{t+1} + A_{t,t+1}^{M_{t+1}}."""

    def __init__(self, base: RiskMeasure):
        super().__init__(base.market)
        self.base = base
        self.name = f"composed({base.name})"
        self.coherent = base.coherent

    def acceptance(self, t, nid):
        key = (t, nid)
        if key not in self._acc_cache:
            if t == self.tree.T:
                A = self.base.acceptance(t, nid)
            else:
                A = self.acceptance_at(t + 1, nid).minkowski_sum(
                    one_step_acceptance(self.base, t, nid))
            self._acc_cache[key] = A
        return self._acc_cache[key]

    def evaluate(self, X, t):
        out = super().evaluate(X, t)
        out.meta["may_fail_finite_at_zero"] = True
        return out

    def finite_at_zero(self, t: int) -> dict:
        R0 = self.evaluate(np.zeros((len(self.tree.leaves), self.tree.d)), t)
        M = self.market.eligible_subspace(t)
        return {g: (not P.is_empty) and not subset(M, P) for g, P in R0.items()}


def compose_backward(measure: RiskMeasure) -> ComposedRisk:
    if not measure.market.nested:
        raise HypothesisViolated("backward composition needs M_t within M_{t+1}")
    return ComposedRisk(measure)


def check_normalization_of_composition(composed: ComposedRisk, claims, pairs=None,
                                       tol: float = TOL_GEO) -> ConsistencyReport:
    """Sufficient conditions for the composition to be normalized, then a direct test."""
    base = composed.base
    tree, market = base.tree, base.market
    zero = np.zeros((len(tree.leaves), tree.d))
    cond_i = True
    for t in range(tree.T + 1):
        R0 = base.evaluate(zero, t)
        Mp = market.positive_eligible(t)
        if not all(equal(P, Mp, tol) for _, P in R0.items()):
            cond_i = False
            break
    hyp = {"base_zero_is_positive_eligible": cond_i}
    if not cond_i:
        pairs = pairs if pairs is not None else tc_pairs(tree, 12, market=market)
        tc = check_time_consistency(base, pairs)
        hyp["base_time_consistent"] = tc.holds
    details = {"trichotomy": {}}
    fails = None
    for t in range(tree.T + 1):
        R0 = composed.evaluate(zero, t)
        finite = all((not P.is_empty) and not subset(market.eligible_subspace(t), P, tol)
                     for _, P in R0.items())
        degenerate = True
        for k, X in enumerate(claims):
            RX = composed.evaluate(X, t)
            for g, P in RX.items():
                if not (P.is_empty or subset(market.eligible_subspace(t), P, tol)):
                    degenerate = False
                if P.is_empty or R0[g].is_empty:
                    continue
                if fails is None and not equal(minkowski_sum(P, R0[g]), P, tol):
                    fails = {"t": t, "claim_index": k, "node": g}
        if composed.coherent:
            details["trichotomy"][t] = ("finite_at_zero" if finite else
                                        "values_in_empty_or_M" if degenerate else "neither")
    verdict = "fails" if fails else "holds"
    return ConsistencyReport("normalization_of_composition", verdict, fails, hyp, details)


# ---------------------------------------------------------------------------
# market compatibility
# ---------------------------------------------------------------------------

def check_market_compat_decomposition(measure: RiskMeasure, claims=None, t: int | None = None,
                                      tol: float = 1e-7, seed=42) -> ConsistencyReport:
    """A_t = A_t + sum over tau >= t of adapted K_tau^{M_tau}, node by node.

    The inclusion of A_t in the sum is immediate (0 lies in every cone); the
    reverse holds iff every generator of the adapted cone sum recedes in A_t.
    """
    tree, market = measure.tree, measure.market
    claims = claims if claims is not None else random_claims(tree, 4, seed, market=market)
    hyp = {"nested_eligible": market.nested}
    if market.nested:
        norm = all(check_axioms(measure, claims, s, axioms=["normalization"])
                   ["normalization"]["verdict"] == "holds" for s in range(tree.T + 1))
        mptc = check_acceptance_decomposition(measure, None).holds
        hyp.update({"normalized": norm, "mptc": mptc})
    if not all(hyp.values()):
        raise HypothesisViolated("market-compatibility lemma needs a normalized, multi-portfolio "
                                 "time consistent measure with nested eligible spaces", hyp)
    times = range(tree.T + 1) if t is None else [t]
    cross = {}
    for s in times:
        rep = check_axioms(measure, claims, s, axioms=["market_compatibility"])
        cross[s] = rep["market_compatibility"]["verdict"]
    details = {"per_time_K_compatibility": cross}
    for s in times:
        for g in tree.layer(s):
            A = measure.acceptance(s, g)
            base = tree.leaves_under(g)
            for n in tree.subtree(g):
                tau = tree.time(n)
                C = solvent_eligible_cone(market, tau, n)
                pos = np.searchsorted(base, tree.leaves_under(n))
                for r in C.rays.astype(float):
                    gen = np.zeros((len(base), tree.d))
                    gen[pos] = r
                    if not A.recedes(gen.reshape(-1), tol):
                        x0 = A.feasible_point()
                        witness = {"t": s, "node": g, "cone_node": n, "generator": r.tolist()}
                        if x0 is not None:
                            witness["claim"] = _claim_from_block(
                                tree, g, x0 + 1e3 * gen.reshape(-1)).to_dict()
                        return ConsistencyReport("market_compat_decomposition", "fails",
                                                 witness, hyp, details)
    return ConsistencyReport("market_compat_decomposition", "holds", None, hyp, details)


def closed_tc_counterexample(market) -> RiskMeasure:
    """Closed one-period analog: A_0 = {X_1 >= 0}, A_T = {X_1 >= 1}, M = span(e^1)."""
    from .riskmeasure import leafwise_acceptance
    tree = market.tree
    d = tree.d
    e1 = np.zeros((1, d))
    e1[0, 0] = 1.0
    sets = {0: Polyhedron.from_h(e1, [0.0])}
    for s in range(1, tree.T + 1):
        sets[s] = Polyhedron.from_h(e1, [1.0])
    return leafwise_acceptance(market, sets)

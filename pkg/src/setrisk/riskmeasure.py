"""Set-valued dynamic risk measures and the acceptance-set calculus.

All set-valued objects are stored node-wise: a time-t value is one polyhedron
in R^d per time-t node. Acceptance sets are ``Lifted`` polyhedra living in the
stacked leaf coordinates of a node's subtree (leaf-major, asset-minor).
"""
from __future__ import annotations

import logging

import numpy as np

from .market import ConicalMarket, solvent_eligible_cone
from .polytope import (Lifted, Polyhedron, TOL_GEO, _lp, equal, geometric_difference,
                       intersect, minkowski_sum, subset, subset_witness)
from .tree import AdaptedVector, ScenarioTree, as_claim

log = logging.getLogger(__name__)


class RiskError(ValueError):
    pass


class BadLambda(RiskError):
    pass


class NotRepresentable(RiskError):
    pass


class RandomSet:
    """Time-t set-valued object: node id -> Polyhedron in R^d."""

    def __init__(self, tree: ScenarioTree, t: int, sets: dict, meta: dict | None = None):
        self.tree = tree
        self.t = t
        self.sets = {n: sets[n] for n in tree.layer(t)}
        self.meta = dict(meta or {})

    def __getitem__(self, nid) -> Polyhedron:
        return self.sets[nid]

    def items(self):
        return self.sets.items()

    def empty_nodes(self) -> list[str]:
        return [n for n, P in self.sets.items() if P.is_empty]

    def subset(self, other: "RandomSet", tol: float = TOL_GEO) -> bool:
        return all(subset(P, other[n], tol) for n, P in self.sets.items())

    def subset_witness(self, other: "RandomSet", tol: float = TOL_GEO):
        for n, P in self.sets.items():
            if not subset(P, other[n], tol):
                w = subset_witness(P, other[n], tol) or {}
                w["node"] = n
                return w
        return None

    def equal(self, other: "RandomSet", tol: float = TOL_GEO) -> bool:
        return self.subset(other, tol) and other.subset(self, tol)

    def map(self, fn) -> "RandomSet":
        return RandomSet(self.tree, self.t, {n: fn(n, P) for n, P in self.sets.items()},
                         self.meta)

    def to_dict(self) -> dict:
        return {"t": self.t, "meta": self.meta,
                "nodes": {n: P.to_dict() for n, P in self.sets.items()}}

    def __repr__(self):
        return f"RandomSet(t={self.t}, nodes={len(self.sets)})"


# ---------------------------------------------------------------------------
# helpers for stacked leaf coordinates
# ---------------------------------------------------------------------------

def leaf_block(tree: ScenarioTree, nid: str) -> np.ndarray:
    return tree.leaves_under(nid)


def sub_positions(tree: ScenarioTree, nid: str, sub: str) -> np.ndarray:
    """Coordinates of ``sub``'s leaves inside ``nid``'s stacked coordinates."""
    d = tree.d
    base = tree.leaves_under(nid)
    rel = np.searchsorted(base, tree.leaves_under(sub))
    return (rel[:, None] * d + np.arange(d)).reshape(-1)


def replicate(tree: ScenarioTree, nid: str) -> np.ndarray:
    """Matrix placing a d-vector at every leaf of ``nid``."""
    L = len(tree.leaves_under(nid))
    return np.tile(np.eye(tree.d), (L, 1))


def measurable_equalities(tree: ScenarioTree, nid: str, s: int) -> np.ndarray:
    """Rows forcing stacked claims below ``nid`` to be F_s-measurable."""
    d = tree.d
    base = tree.leaves_under(nid)
    anc = tree.ancestor_index(s)[base]
    rows = []
    for j in range(1, len(base)):
        if anc[j] == anc[j - 1]:
            for i in range(d):
                r = np.zeros(len(base) * d)
                r[(j - 1) * d + i] = 1.0
                r[j * d + i] = -1.0
                rows.append(r)
    return np.array(rows).reshape(-1, len(base) * d)


def eligible_equalities(tree: ScenarioTree, market: ConicalMarket, nid: str, s: int):
    """Rows forcing every leaf block below ``nid`` to lie in M_s."""
    N = market.eligible_complement(s)
    L = len(tree.leaves_under(nid))
    if len(N) == 0:
        return np.zeros((0, L * tree.d))
    return np.kron(np.eye(L), N)


def cone_sum_lifted(tree: ScenarioTree, nid: str, cones: dict, s0: int | None = None) -> Lifted:
    """{x : x(leaf) = sum of k(n) along the path, k(n) in cones[n]} below ``nid``.

    Nodes of the subtree at times >= s0 (default: the node's own time) carry a
    variable; ``cones`` maps node ids to Polyhedron cones.
    """
    d = tree.d
    s0 = tree.time(nid) if s0 is None else s0
    base = tree.leaves_under(nid)
    L = len(base)
    nodes = [n for n in tree.subtree(nid) if tree.time(n) >= s0]
    col = {n: i for i, n in enumerate(nodes)}
    K = len(nodes) * d
    Ay_rows, b = [], []
    for n in nodes:
        C = cones[n]
        for a in C.A.astype(float):
            row = np.zeros(K)
            row[col[n] * d:(col[n] + 1) * d] = a
            Ay_rows.append(row)
            b.append(0.0)
    Ay = np.array(Ay_rows).reshape(-1, K)
    Ex = np.eye(L * d)
    Ey = np.zeros((L * d, K))
    for j, leaf_pos in enumerate(base):
        leaf = tree.leaves[leaf_pos]
        for n in tree.path(leaf):
            if n in col:
                Ey[j * d:(j + 1) * d, col[n] * d:(col[n] + 1) * d] -= np.eye(d)
    return Lifted(L * d, K, np.zeros((len(b), L * d)), Ay, np.array(b), Ex, Ey,
                  np.zeros(L * d))


# ---------------------------------------------------------------------------
# risk measures
# ---------------------------------------------------------------------------

class RiskMeasure:
    """Dynamic risk measure given node-wise by conditional acceptance sets."""

    name = "acceptance"
    coherent = False

    def __init__(self, market: ConicalMarket):
        self.market = market
        self.tree = market.tree
        self._acc_cache = {}

    # acceptance sets --------------------------------------------------------
    def acceptance(self, t: int, nid: str) -> Lifted:
        raise NotRepresentable(f"{self.name} has no polyhedral acceptance set")

    def acceptance_at(self, s: int, nid: str) -> Lifted:
        """A_s restricted to the subtree of ``nid`` (product over time-s nodes)."""
        tree = self.tree
        if s == tree.time(nid):
            return self.acceptance(s, nid)
        subs = tree.descendants(nid, s)
        parts = [self.acceptance(s, h) for h in subs]
        pos = [sub_positions(tree, nid, h) for h in subs]
        return Lifted.product(parts, pos, len(tree.leaves_under(nid)) * tree.d)

    # evaluation -----------------------------------------------------------------
    def node_value(self, X: AdaptedVector, t: int, nid: str) -> Polyhedron:
        return risk_from_acceptance_node(self, X, t, nid)

    def evaluate(self, X, t: int) -> RandomSet:
        X = as_claim(self.tree, X)
        sets = {n: self.node_value(X, t, n) for n in self.tree.layer(t)}
        return RandomSet(self.tree, t, sets, {"measure": self.name})

    def evaluate_all(self, X) -> list[RandomSet]:
        return [self.evaluate(X, t) for t in range(self.tree.T + 1)]

    def __repr__(self):
        return f"{type(self).__name__}({self.name})"


def risk_from_acceptance_node(measure: RiskMeasure, X: AdaptedVector, t: int,
                              nid: str, tol: float = 1e-9) -> Polyhedron:
    """{u in M_t : X + u in A_t} at one node, by projecting the lifted system."""
    tree = measure.tree
    A = measure.acceptance(t, nid)
    base = tree.leaves_under(nid)
    Xg = X.values[base].reshape(-1)
    U = A.preimage(replicate(tree, nid), Xg)
    N = measure.market.eligible_complement(t)
    if len(N):
        U = U.with_equalities(N)
    return U.to_polyhedron(tol=tol)


def risk_from_acceptance(measure: RiskMeasure, X, t: int) -> RandomSet:
    X = as_claim(measure.tree, X)
    sets = {n: risk_from_acceptance_node(measure, X, t, n) for n in measure.tree.layer(t)}
    out = RandomSet(measure.tree, t, sets, {"measure": measure.name, "route": "acceptance"})
    if out.empty_nodes():
        out.meta["empty_nodes"] = out.empty_nodes()
    return out


class AcceptanceSet:
    """Stacked acceptance set A_t over all leaves, with an optional structured form."""

    def __init__(self, tree, t, lifted: Lifted, form: str = "lifted", parts=None):
        self.tree, self.t, self.lifted, self.form = tree, t, lifted, form
        self.parts = parts

    def contains(self, X, tol=1e-9) -> bool:
        X = as_claim(self.tree, X)
        return self.lifted.contains(X.values.reshape(-1), tol)


def acceptance_from_risk(measure: RiskMeasure, t: int) -> AcceptanceSet:
    """{X : 0 in R_t(X)} as a stacked lifted polyhedron."""
    tree = measure.tree
    if type(measure).acceptance is RiskMeasure.acceptance:
        raise NotRepresentable(f"{measure.name} has no polyhedral acceptance set")
    layer = tree.layer(t)
    parts = [measure.acceptance(t, g) for g in layer]
    pos = [(tree.leaves_under(g)[:, None] * tree.d + np.arange(tree.d)).reshape(-1)
           for g in layer]
    lifted = Lifted.product(parts, pos, len(tree.leaves) * tree.d)
    form = getattr(measure, "acceptance_form", "lifted")
    return AcceptanceSet(tree, t, lifted, form, parts)


class UserAcceptance(RiskMeasure):
    """Risk measure from user-supplied stacked acceptance sets per time.

    ``sets[t]`` is a Polyhedron or Lifted over all leaves (d * #leaves coords);
    the node-wise piece at a time-t node is its projection onto the node's
    leaf coordinates.
    """

    name = "user"

    def __init__(self, market, sets: dict, coherent: bool = False):
        super().__init__(market)
        self.sets = {}
        n = len(self.tree.leaves) * self.tree.d
        for t in range(self.tree.T + 1):
            S = sets.get(t, sets.get(str(t)))
            if S is None:
                raise RiskError(f"no acceptance set for time {t}")
            if isinstance(S, Polyhedron):
                S = Lifted.from_polyhedron(S)
            if S.n != n:
                raise RiskError(f"acceptance set at time {t} has dimension {S.n} != {n}")
            self.sets[t] = S
        self.coherent = coherent

    def acceptance(self, t, nid):
        key = (t, nid)
        if key not in self._acc_cache:
            base = self.tree.leaves_under(nid)
            keep = (base[:, None] * self.tree.d + np.arange(self.tree.d)).reshape(-1)
            self._acc_cache[key] = self.sets[t].eliminate(keep)
        return self._acc_cache[key]


def leafwise_acceptance(market, per_leaf: dict, coherent=False) -> UserAcceptance:
    """Acceptance sets {X : X(leaf) in P_t for every leaf} from one polyhedron per t."""
    tree = market.tree
    L = len(tree.leaves)
    sets = {}
    for t, P in per_leaf.items():
        sets[int(t)] = Lifted(L * tree.d, 0, np.kron(np.eye(L), P.A.astype(float)), None,
                              np.tile(P.b.astype(float), L))
    return UserAcceptance(market, sets, coherent=coherent)


class WorstCase(RiskMeasure):
    """Acceptance set L_+ at every time."""

    name = "worst-case"
    coherent = True
    acceptance_form = "orthant"

    def acceptance(self, t, nid):
        n = len(self.tree.leaves_under(nid)) * self.tree.d
        return Lifted(n, 0, np.eye(n), None, np.zeros(n))

    def node_value(self, X, t, nid):
        return worst_case_node(self.market, X, t, nid)


def worst_case_node(market, X: AdaptedVector, t: int, nid: str) -> Polyhedron:
    tree = market.tree
    lo = (-X.values[tree.leaves_under(nid)]).max(axis=0)
    P = Polyhedron.from_h(np.eye(tree.d), lo)
    if not market.is_full(t):
        P = intersect(P, market.eligible_subspace(t))
    return P


def worst_case(X, t: int, market: ConicalMarket) -> RandomSet:
    """Node-wise {u in M_t : u >= -X(h) for every leaf h below the node}."""
    return WorstCase(market).evaluate(X, t)


class Superhedging(RiskMeasure):
    """R_t(X) = SHP_t(-X): superhedging portfolios of -X under solvency cones."""

    name = "shp"
    coherent = True
    acceptance_form = "cone-sum"

    def acceptance(self, t, nid):
        key = (t, nid)
        if key not in self._acc_cache:
            self._acc_cache[key] = cone_sum_lifted(self.tree, nid, self.market.cones)
        return self._acc_cache[key]

    def cone_sum_parts(self, t, nid):
        """Per-node cones whose adapted sum is the acceptance set below ``nid``."""
        return {n: self.market.cone(n) for n in self.tree.subtree(nid)}

    def evaluate_all(self, X):
        X = as_claim(self.tree, X)
        sets = shp(-X, self.market)
        return [self._restrict(S) for S in sets]

    def evaluate(self, X, t):
        X = as_claim(self.tree, X)
        return self._restrict(shp(-X, self.market, t_stop=t)[t])

    def node_value(self, X, t, nid):
        return self.evaluate(X, t)[nid]

    def _restrict(self, S: RandomSet) -> RandomSet:
        S.meta["measure"] = self.name
        if self.market.is_full(S.t):
            return S
        M = self.market.eligible_subspace(S.t)
        out = S.map(lambda n, P: intersect(P, M))
        out.meta["post_hoc_eligible"] = True
        return out


def shp(X, market: ConicalMarket, t_stop: int = 0, exact_values=None) -> list:
    """Superhedging sets by backward recursion; result[t] is SHP_t(X) for t >= t_stop.

    SHP_T(g) = X(g) + K_T(g) and SHP_t(g) = (intersection over successors of
    SHP_{t+1}) + K_t(g), all with the full space as eligible portfolios.
    ``exact_values`` (leaf id -> Fractions) replaces X when the cones are exact.
    """
    tree = market.tree
    X = as_claim(tree, X)
    out = [None] * (tree.T + 1)
    cur = {}
    for j, h in enumerate(tree.leaves):
        v = X.values[j] if exact_values is None else exact_values[h]
        cur[h] = market.cone(h).translate(v)
    out[tree.T] = RandomSet(tree, tree.T, cur, {"measure": "shp"})
    flagged = []
    for t in range(tree.T - 1, t_stop - 1, -1):
        nxt = {}
        for g in tree.layer(t):
            P = None
            for h in tree.children(g):
                P = cur[h] if P is None else intersect(P, cur[h])
            if P.is_empty:
                flagged.append(g)
                nxt[g] = P
            else:
                nxt[g] = minkowski_sum(P, market.cone(g))
        cur = nxt
        out[t] = RandomSet(tree, t, cur, {"measure": "shp"})
        if flagged:
            out[t].meta["empty_intersection"] = list(flagged)
    return out


class AVaR(RiskMeasure):
    """Set-valued average value at risk with node-wise levels lambda in (0, 1]^d.

    The value at a time-t node is the projection of the primal polyhedron
    {u in M_t : u >= diag(lambda)^{-1} E[Z|F_t] - z, Z >= z - X, Z >= 0}.
    With ``market_compatible`` the solvent eligible cone K_t^{M_t} is added.
    """

    name = "avar"
    coherent = True

    def __init__(self, market, lam=None, market_compatible: bool = False):
        super().__init__(market)
        tree = self.tree
        self.lam = {}
        for t in range(tree.T + 1):
            for n in tree.layer(t):
                v = np.ones(tree.d)
                if isinstance(lam, dict) and n in lam:
                    v = np.asarray(lam[n], float)
                elif lam is not None and not isinstance(lam, dict):
                    v = np.broadcast_to(np.asarray(lam, float), (tree.d,)).copy()
                if v.shape != (tree.d,) or np.any(v <= 0) or np.any(v > 1):
                    raise BadLambda(f"lambda at {n!r} must lie in (0, 1]^d, got {v}")
                self.lam[n] = v
        self.market_compatible = market_compatible
        if market_compatible:
            self.name = "avar-K"

    def lam_vector(self, nid):
        return self.lam[nid]

    def _base_acceptance(self, t, nid):
        tree, d = self.tree, self.tree.d
        base = tree.leaves_under(nid)
        L = len(base)
        p = tree.leaf_prob[base] / tree.prob(nid)
        lam = self.lam[nid]
        n = L * d
        K = d + n                      # (z, Z)
        rows_x, rows_y, b = [], [], []
        # Z >= 0
        rows_x.append(np.zeros((n, n)))
        rows_y.append(np.hstack([np.zeros((n, d)), np.eye(n)]))
        b.append(np.zeros(n))
        # Z(h) + x(h) - z >= 0
        rows_x.append(np.eye(n))
        rows_y.append(np.hstack([-np.tile(np.eye(d), (L, 1)), np.eye(n)]))
        b.append(np.zeros(n))
        # z_i - lam_i^{-1} sum_h p(h) Z_i(h) >= 0
        Ez = np.kron(p.reshape(1, -1), np.eye(d)) / lam[:, None]
        rows_x.append(np.zeros((d, n)))
        rows_y.append(np.hstack([np.eye(d), -Ez]))
        b.append(np.zeros(d))
        return Lifted(n, K, np.vstack(rows_x), np.vstack(rows_y), np.concatenate(b))

    def acceptance(self, t, nid):
        key = (t, nid)
        if key not in self._acc_cache:
            A = self._base_acceptance(t, nid)
            if self.market_compatible:
                C = solvent_eligible_cone(self.market, t, nid)
                d = self.tree.d
                Kl = Lifted(d, 0, C.A.astype(float), None, C.b.astype(float))
                R = replicate(self.tree, nid)
                # {R k : k in K^M}: x - R k = 0 with k auxiliary
                n = R.shape[0]
                cone_part = Lifted(n, d, np.zeros((len(Kl.b), n)), Kl.Ax, Kl.b,
                                   np.eye(n), -R, np.zeros(n))
                A = A.minkowski_sum(cone_part)
            self._acc_cache[key] = A
        return self._acc_cache[key]

    def node_value(self, X, t, nid):
        tree, d = self.tree, self.tree.d
        base = tree.leaves_under(nid)
        p = tree.leaf_prob[base] / tree.prob(nid)
        lam = self.lam[nid]
        v = np.array([_scalar_avar_lp(X.values[base, i], p, lam[i]) for i in range(d)])
        P = Polyhedron.from_h(np.eye(d), v)
        if not self.market.is_full(t):
            P = intersect(P, self.market.eligible_subspace(t))
        if self.market_compatible and not P.is_empty:
            P = minkowski_sum(P, solvent_eligible_cone(self.market, t, nid))
        return P


def _scalar_avar_lp(x, p, lam) -> float:
    """min over (z, Z) of lam^{-1} p.Z - z with Z >= z - x, Z >= 0."""
    L = len(x)
    c = np.concatenate([[-1.0], p / lam])
    A_ub = np.hstack([np.ones((L, 1)), -np.eye(L)])      # z - Z <= x
    bounds = [(None, None)] + [(0, None)] * L
    res = _lp(c, A_ub, np.asarray(x, float), None, None, bounds)
    if res.status != 0:
        raise RiskError(f"AV@R LP failed: {res.message}")
    return float(res.fun)


def avar(X, lam, t: int, market: ConicalMarket, market_compatible: bool = False) -> RandomSet:
    return AVaR(market, lam, market_compatible).evaluate(X, t)


# ---------------------------------------------------------------------------
# normalization and axioms
# ---------------------------------------------------------------------------

def normalize(RX: RandomSet, R0: RandomSet) -> RandomSet:
    """Node-wise geometric difference R(X) -. R(0)."""
    out = RX.map(lambda n, P: geometric_difference(P, R0[n]))
    out.meta["normalized"] = True
    return out


def _claim_rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_claims(tree: ScenarioTree, n: int, seed=42, scale: float = 1.0,
                  market: ConicalMarket | None = None) -> list[AdaptedVector]:
    """Seeded family of terminal claims (optionally M_T-valued)."""
    rng = _claim_rng(seed)
    out = []
    for _ in range(n):
        V = scale * rng.normal(size=(len(tree.leaves), tree.d))
        if market is not None and not market.is_full(tree.T):
            V = market.project_eligible(tree.T, V)
        out.append(AdaptedVector(tree, tree.T, np.round(V, 6)))
    return out


def _adapted_eligible(market, t, rng, scale=1.0):
    tree = market.tree
    B = market.eligible_basis(t)
    c = scale * rng.normal(size=(tree.n_nodes(t), len(B)))
    return AdaptedVector(tree, t, np.round(c @ B, 6))


AGGREGATE_AXIOMS = {
    "coherence": ("convexity", "positive_homogeneity"),
    "conditional_coherence": ("conditional_convexity", "conditional_positive_homogeneity"),
}


def check_axioms(measure: RiskMeasure, claims, t: int, tol: float = TOL_GEO, seed=42,
                 axioms=None) -> dict:
    """Pass/fail per axiom with a witness, via polyhedral subset tests.

    Axioms: translativity, monotonicity, finite_at_zero, convexity,
    conditional_convexity, positive_homogeneity, conditional_positive_homogeneity,
    subadditivity, market_compatibility, normalization; plus the derived
    coherence and conditional_coherence.
    """
    rng = _claim_rng(seed)
    tree, market = measure.tree, measure.market
    claims = [as_claim(tree, X) for X in claims]
    cache = {}

    def R(X):
        key = X.values.tobytes()
        if key not in cache:
            cache[key] = measure.evaluate(X, t)
        return cache[key]

    layer = tree.layer(t)
    report = {}

    def record(name, witness):
        if name in report and report[name]["verdict"] == "fails":
            return
        report[name] = {"verdict": "fails" if witness else "holds", "witness": witness}

    wanted = set(axioms) if axioms else None
    if wanted:
        # aggregates need their parts
        for agg, parts in AGGREGATE_AXIOMS.items():
            if agg in wanted:
                wanted.update(parts)

    def want(name):
        return wanted is None or name in wanted

    R0 = R(AdaptedVector.constant(tree, tree.T, np.zeros(tree.d)))
    if want("finite_at_zero"):
        wit = None
        for g in layer:
            P = R0[g]
            M = market.eligible_subspace(t)
            if P.is_empty:
                wit = {"node": g, "reason": "R(0) is empty"}
            elif subset(M, P, tol):
                wit = {"node": g, "reason": "R(0) is all of M_t"}
            if wit:
                break
        record("finite_at_zero", wit)
    n = len(claims)
    for k, X in enumerate(claims):
        RX = R(X)
        Y = claims[(k + 1) % n]
        if want("translativity"):
            m = _adapted_eligible(market, t, rng)
            lhs = R(X + m.extend(tree.T))
            rhs = RX.map(lambda g, P: P.translate(-m[g]))
            wit = _eq_witness(lhs, rhs, tol)
            record("translativity", wit and {"claim": k, "shift": m.to_dict(), **wit})
        if want("monotonicity"):
            Yp = X + np.round(np.abs(rng.normal(size=X.values.shape)), 6)
            wit = RX.subset_witness(R(Yp), tol)
            record("monotonicity", wit and {"claim": k, **wit})
        if want("convexity") or want("conditional_convexity"):
            for cond in (False, True):
                name = "conditional_convexity" if cond else "convexity"
                if not want(name):
                    continue
                if cond:
                    a = np.round(rng.uniform(0.1, 0.9, size=len(layer)), 6)
                else:
                    a = np.full(len(layer), round(float(rng.uniform(0.1, 0.9)), 6))
                al = a[tree.ancestor_index(t)][:, None]
                Z = AdaptedVector(tree, tree.T, al * X.values + (1 - al) * Y.values)
                RY, RZ = R(Y), R(Z)
                wit = None
                for i, g in enumerate(layer):
                    if RX[g].is_empty or RY[g].is_empty:
                        continue
                    mix = minkowski_sum(RX[g].scale(a[i]), RY[g].scale(1 - a[i]))
                    if not subset(mix, RZ[g], tol):
                        wit = {"claim": k, "node": g, "alpha": float(a[i])}
                        break
                record(name, wit)
        for cond in (False, True):
            name = "conditional_positive_homogeneity" if cond else "positive_homogeneity"
            if not want(name):
                continue
            if cond:
                s = np.round(rng.uniform(0.2, 3.0, size=len(layer)), 6)
            else:
                s = np.full(len(layer), round(float(rng.uniform(0.2, 3.0)), 6))
            sl = s[tree.ancestor_index(t)][:, None]
            RS = R(AdaptedVector(tree, tree.T, sl * X.values))
            rhs = RandomSet(tree, t, {g: RX[g].scale(s[i]) for i, g in enumerate(layer)})
            wit = _eq_witness(RS, rhs, tol)
            record(name, wit and {"claim": k, **wit})
        if want("subadditivity"):
            RY = R(Y)
            RXY = R(X + Y)
            wit = None
            for g in layer:
                S = minkowski_sum(RX[g], RY[g])
                if not subset(S, RXY[g], tol):
                    wit = {"claim": k, "node": g}
                    break
            record("subadditivity", wit)
        if want("market_compatibility"):
            wit = None
            for g in layer:
                P = RX[g]
                if P.is_empty:
                    continue
                Q = minkowski_sum(P, solvent_eligible_cone(market, t, g))
                if not subset(Q, P, tol):
                    wit = {"claim": k, "node": g}
                    break
            record("market_compatibility", wit)
        if want("normalization"):
            wit = None
            for g in layer:
                P = RX[g]
                if P.is_empty or R0[g].is_empty:
                    continue
                if not equal(minkowski_sum(P, R0[g]), P, tol):
                    wit = {"claim": k, "node": g}
                    break
            record("normalization", wit)
    for agg, parts in AGGREGATE_AXIOMS.items():
        if all(p in report for p in parts):
            bad = [p for p in parts if report[p]["verdict"] == "fails"]
            report[agg] = {"verdict": "fails" if bad else "holds",
                           "witness": {"failed": bad} if bad else None}
    return report


def _eq_witness(A: RandomSet, B: RandomSet, tol):
    w = A.subset_witness(B, tol)
    if w:
        return {"direction": "lhs not in rhs", **w}
    w = B.subset_witness(A, tol)
    if w:
        return {"direction": "rhs not in lhs", **w}
    return None

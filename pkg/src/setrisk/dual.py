"""Dual pairs (Q, w), conditional halfspaces, minimal penalties and pricing processes.

Everything is evaluated on the finite tree: a pair (Q, w) at time t is a
vector density Q together with one weight vector w(g) per time-t node, and
the associated halfspace at g is {u in M_t : w(g).u >= w(g).E^Q[X|F_t](g)}.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .market import ConicalMarket, check_robust_no_arbitrage, verify_pricing_process
from .parallel import pmap
from .polytope import EmptyPolyhedron, Polyhedron, _lp, intersect, support
from .riskmeasure import AVaR, NotRepresentable, RandomSet, RiskMeasure, Superhedging, replicate
from .tree import (AdaptedVector, ScenarioTree, TOL_NUM, VectorDensity, as_claim,
                   cond_expectation_P, cond_expectation_Q)

TOL_DUAL = 1e-7


class DualError(ValueError):
    pass


class NegativeY(DualError):
    pass


class OrthogonalV(DualError):
    pass


class ConeViolation(DualError):
    pass


class EmptyAcceptance(DualError):
    pass


class NotPolyhedral(DualError):
    pass


# ---------------------------------------------------------------------------
# dual pairs
# ---------------------------------------------------------------------------

@dataclass
class DualPair:
    """(Q, w) at time t; ``arbitrary[i]`` marks components where Q_i was free."""

    Q: VectorDensity
    w: np.ndarray                    # n_t x d, rows follow tree.layer(t)
    t: int
    arbitrary: np.ndarray = None

    def __post_init__(self):
        tree = self.Q.tree
        self.w = np.asarray(self.w, float).reshape(tree.n_nodes(self.t), tree.d)
        if self.arbitrary is None:
            self.arbitrary = np.zeros(tree.d, bool)

    @property
    def tree(self) -> ScenarioTree:
        return self.Q.tree

    def weight(self, nid) -> np.ndarray:
        return self.w[self.tree.index(nid)]

    def ratio(self) -> np.ndarray:
        """dQ/dP divided by E[dQ/dP|F_t], per leaf (zero-mass branches use P)."""
        tree = self.tree
        W = self.Q.weights(self.t).sum(axis=0)
        C = tree.cond_prob(self.t).sum(axis=0)
        return W / C[:, None]

    def y(self) -> np.ndarray:
        """Leaf field diag(w) diag(E[dQ/dP|F_t])^{-1} dQ/dP."""
        return self.w[self.tree.ancestor_index(self.t)] * self.ratio()

    def coupling_ok(self, tol: float = TOL_NUM) -> bool:
        return bool(np.all(self.y() >= -tol))

    def nonorthogonal(self, market: ConicalMarket | None = None, tol: float = TOL_NUM) -> bool:
        """w(g) not in M_t^perp at every time-t node."""
        W = self.w if market is None else market.project_eligible(self.t, self.w)
        return bool(np.all(np.abs(W).max(axis=1) > tol))

    def is_valid(self, market: ConicalMarket | None = None, tol: float = TOL_NUM) -> bool:
        return self.coupling_ok(tol) and self.nonorthogonal(market, tol)

    def rescale(self, factors) -> "DualPair":
        """Same Q, weights multiplied node-wise by positive factors."""
        f = np.asarray(factors, float).reshape(-1, 1)
        if np.any(f <= 0):
            raise DualError("scaling factors must be positive")
        return DualPair(self.Q, self.w * f, self.t, self.arbitrary.copy())

    def to_dict(self) -> dict:
        tree = self.tree
        return {"t": self.t, "Q": self.Q.to_dict(),
                "w": {n: self.w[i].tolist() for i, n in enumerate(tree.layer(self.t))},
                "arbitrary": [bool(a) for a in self.arbitrary]}

    @classmethod
    def from_dict(cls, tree, data: dict, t: int | None = None) -> "DualPair":
        Q = VectorDensity.from_dict(tree, data["Q"])
        if t is None:
            t = int(data.get("t", tree.time(next(iter(data["w"])))))
        w = np.array([data["w"][n] for n in tree.layer(t)], float)
        arb = np.array(data.get("arbitrary", [False] * tree.d), bool)
        return cls(Q, w, t, arb)

    @classmethod
    def load(cls, tree, path, t=None) -> "DualPair":
        with open(path) as fh:
            return cls.from_dict(tree, json.load(fh), t)


def qw_from_yv(tree: ScenarioTree, Y, v=None, t: int = 0, market: ConicalMarket | None = None,
               tol: float = TOL_NUM) -> DualPair:
    """(Q, w) with w = E[Y|F_t] and dQ_i/dP = Y_i / E[Y_i]."""
    Y = np.asarray(Y, float).reshape(len(tree.leaves), tree.d)
    if np.any(Y < -tol):
        raise NegativeY("Y must be nonnegative")
    Y = np.maximum(Y, 0.0)
    w = cond_expectation_P(AdaptedVector(tree, tree.T, Y), t).values
    if v is not None:
        v = np.asarray(v, float).reshape(w.shape)
        diff, vm = v - w, v
        if market is not None:
            diff, vm = market.project_eligible(t, diff), market.project_eligible(t, v)
        if np.abs(diff).max() > 1e-7 * max(1.0, np.abs(v).max()):
            raise OrthogonalV("v - E[Y|F_t] is not orthogonal to M_t")
        if np.any(np.abs(vm).max(axis=1) <= tol):
            raise OrthogonalV("v is orthogonal to M_t at some node")
    mean = tree.leaf_prob @ Y
    arbitrary = mean <= tol
    D = np.ones_like(Y)
    pos = ~arbitrary
    D[:, pos] = Y[:, pos] / mean[pos]
    return DualPair(VectorDensity(tree, D), w, t, arbitrary)


def yv_from_qw(pair: DualPair):
    """Reverse transform: (Y, v) with Y = diag(w) diag(E[dQ/dP|F_t])^{-1} dQ/dP, v = w."""
    return pair.y(), pair.w.copy()


def bilinear_gap(pair: DualPair, Y, X) -> float:
    """|E[X.Y] - E[w.E^Q[X|F_t]]| for one claim."""
    tree = pair.tree
    X = as_claim(tree, X)
    lhs = float(tree.leaf_prob @ np.sum(np.asarray(Y) * X.values, axis=1))
    EQ = cond_expectation_Q(X, pair.Q, pair.t).values
    probs = np.array([tree.prob(n) for n in tree.layer(pair.t)])
    rhs = float(probs @ np.sum(pair.w * EQ, axis=1))
    return abs(lhs - rhs)


# ---------------------------------------------------------------------------
# halfspaces and penalties
# ---------------------------------------------------------------------------

def conditional_halfspace(pair: DualPair, X, market: ConicalMarket | None = None) -> RandomSet:
    """Node-wise (E^Q[X|F_t](g) + {x : w(g).x >= 0}) intersected with M_t."""
    tree, t = pair.tree, pair.t
    X = as_claim(tree, X)
    EQ = cond_expectation_Q(X, pair.Q, t).values
    sets = {}
    for i, g in enumerate(tree.layer(t)):
        w = pair.w[i]
        H = Polyhedron.from_h(w.reshape(1, -1), [float(w @ EQ[i])]) if np.any(w) \
            else Polyhedron.whole(tree.d)
        if market is not None and not market.is_full(t):
            H = intersect(H, market.eligible_subspace(t))
        sets[g] = H
    return RandomSet(tree, t, sets, {"kind": "conditional_halfspace"})


def _penalty_objective(pair: DualPair, g: str) -> np.ndarray:
    """c with c.Z = w(g).E^Q[Z|F_t](g) for Z stacked over the leaves below g."""
    tree = pair.tree
    i = tree.index(g)
    W = pair.Q.weights(pair.t)[i][tree.leaves_under(g)]
    return (W * pair.w[i]).reshape(-1)


def min_penalty(pair: DualPair, measure: RiskMeasure) -> dict:
    """beta(g) = inf over Z in A_t(g) of w(g).E^Q[Z|F_t](g); -inf when unbounded."""
    tree, t = pair.tree, pair.t
    out = {}
    for g in tree.layer(t):
        A = measure.acceptance(t, g)
        try:
            val, _ = A.minimize(_penalty_objective(pair, g))
        except EmptyPolyhedron:
            raise EmptyAcceptance(f"acceptance set at {g!r} is empty") from None
        out[g] = val
    return out


def penalized_halfspace(pair: DualPair, measure: RiskMeasure, X, beta=None) -> dict:
    """Node-wise (w(g), rhs(g)) of {u : w.u >= beta + w.E^Q[-X|F_t]}; rhs -inf if improper."""
    tree, t = pair.tree, pair.t
    X = as_claim(tree, X)
    beta = min_penalty(pair, measure) if beta is None else beta
    EQ = cond_expectation_Q(-X, pair.Q, t).values
    out = {}
    for i, g in enumerate(tree.layer(t)):
        out[g] = (pair.w[i], beta[g] + float(pair.w[i] @ EQ[i]))
    return out


def avar_dual_membership(pair: DualPair, lam, market: ConicalMarket | None = None,
                         market_compatible: bool = False, tol: float = TOL_NUM) -> bool:
    """diag(w)(diag(lambda)^{-1} 1 - normalized density) >= 0 leaf-wise."""
    tree, t = pair.tree, pair.t
    layer = tree.layer(t)
    if isinstance(lam, AVaR):
        L = np.array([lam.lam_vector(g) for g in layer])
    elif isinstance(lam, dict):
        L = np.array([np.asarray(lam.get(g, np.ones(tree.d)), float) for g in layer])
    else:
        L = np.broadcast_to(np.asarray(lam, float), (len(layer), tree.d))
    anc = tree.ancestor_index(t)
    val = pair.w[anc] * (1.0 / L[anc] - pair.ratio())
    if np.any(val < -tol):
        return False
    if market_compatible:
        if market is None:
            raise DualError("market needed for the market-compatible dual set")
        from .market import solvent_eligible_cone
        for i, g in enumerate(layer):
            C = solvent_eligible_cone(market, t, g)
            if np.any(C.rays.astype(float) @ pair.w[i] < -tol):
                return False
    return True


# ---------------------------------------------------------------------------
# pricing processes
# ---------------------------------------------------------------------------

@dataclass
class PricingProcess:
    """Adapted d-vector process Z on nodes at times >= t0 (optionally below root)."""

    Z: dict
    t0: int = 0
    root: str | None = None
    meta: dict = field(default_factory=dict)

    def validate(self, market: ConicalMarket, tol: float = TOL_NUM) -> bool:
        return verify_pricing_process(market, self.Z, self.t0, self.root, tol)

    def terminal(self, tree) -> np.ndarray:
        return np.array([self.Z[h] for h in tree.leaves], float)

    def to_dict(self) -> dict:
        return {"t0": self.t0, "root": self.root, "meta": self.meta,
                "Z": {n: [float(x) for x in z] for n, z in self.Z.items()}}


def _check_cones(market, Z: dict, tol):
    for n, z in Z.items():
        R = market.cone(n).rays.astype(float)
        if len(R) and np.any(R @ z < -tol * max(1.0, np.abs(z).max())):
            raise ConeViolation(f"Z at {n!r} is not in the dual solvency cone")


def cpp_from_pair(pair: DualPair, market: ConicalMarket, root: str | None = None,
                  tol: float = TOL_NUM) -> PricingProcess:
    """Z_T = diag(w) diag(E[dQ/dP|F_t])^{-1} dQ/dP and Z_s = E[Z_T|F_s] for s >= t."""
    tree, t = pair.tree, pair.t
    ZT = AdaptedVector(tree, tree.T, pair.y())
    Z = {}
    for s in range(t, tree.T + 1):
        vals = cond_expectation_P(ZT, s).values
        for i, n in enumerate(tree.layer(s)):
            if root is None or tree.ancestor(n, tree.time(root)) == root:
                Z[n] = vals[i]
    _check_cones(market, Z, tol)
    return PricingProcess(Z, t, root)


def pair_from_cpp(Z: PricingProcess, tree: ScenarioTree, t: int,
                  market: ConicalMarket | None = None, tol: float = TOL_NUM) -> DualPair:
    """w = Z_t and dQ_i/dP = Z_{T,i} / E[Z_{T,i}]."""
    missing = [h for h in tree.leaves if h not in Z.Z] + \
              [g for g in tree.layer(t) if g not in Z.Z]
    if missing:
        raise DualError(f"pricing process undefined at {missing[:5]}")
    if market is not None:
        _check_cones(market, {n: np.asarray(z, float) for n, z in Z.Z.items()}, tol)
    pair = qw_from_yv(tree, Z.terminal(tree), t=t, tol=tol)
    w = np.array([Z.Z[g] for g in tree.layer(t)], float)
    if np.abs(w - pair.w).max() > 1e-7 * max(1.0, np.abs(w).max()):
        raise DualError("Z is not a martingale between t and T")
    return pair


# ---------------------------------------------------------------------------
# facet certificates
# ---------------------------------------------------------------------------

def facets(P: Polyhedron, tol: float = 1e-8) -> list:
    """Inequality rows (a, b) of P that are not part of an equality pair."""
    A, b = P.A.astype(float), P.b.astype(float)
    eq = set()
    for i in range(len(A)):
        for j in range(i + 1, len(A)):
            if np.allclose(A[i], -A[j], atol=tol) and abs(b[i] + b[j]) <= tol:
                eq.update((i, j))
    return [(A[i], float(b[i])) for i in range(len(A)) if i not in eq]


def _facet_dual(measure: RiskMeasure, X: AdaptedVector, t: int, g: str, a, b,
                tol: float = 1e-9):
    """Dual multipliers of min a.u over R_t(X)(g), as the leaf field zeta below g.

    Second stage: among (near) optimal duals pick one maximizing the smallest
    leaf mass, so the certificate is strictly positive whenever possible.
    """
    tree, d = measure.tree, measure.tree.d
    A = measure.acceptance(t, g)
    base = tree.leaves_under(g)
    Xg = X.values[base].reshape(-1)
    Rep = replicate(tree, g)
    N = measure.market.eligible_complement(t)
    m, me, nN = len(A.b), len(A.e), len(N)
    nv = m + me + nN
    G = np.hstack([A.Ax.T, A.Ex.T])                               # zeta = G [lam; mu]
    eq_rows = [np.hstack([Rep.T @ G, N.T if nN else np.zeros((d, 0))])]
    eq_rhs = [np.asarray(a, float)]
    if A.k:
        eq_rows.append(np.hstack([A.Ay.T, A.Ey.T, np.zeros((A.k, nN))]))
        eq_rhs.append(np.zeros(A.k))
    Aeq = np.vstack(eq_rows)
    beq = np.concatenate(eq_rhs)
    gain = np.concatenate([A.b - A.Ax @ Xg, A.e - A.Ex @ Xg, np.zeros(nN)])
    bounds = [(0, None)] * m + [(None, None)] * (me + nN)
    res = _lp(-gain, None, None, Aeq, beq, bounds)
    if res.status != 0:
        return None, None
    opt = -float(res.fun)
    # second stage: maximize the smallest leaf mass 1.zeta_j / p_j
    p = tree.leaf_prob[base] / tree.prob(g)
    L = len(base)
    S = np.zeros((L, nv + 1))
    for j in range(L):
        S[j, :m + me] = -(np.ones(d) @ G[j * d:(j + 1) * d]) / p[j]
        S[j, -1] = 1.0
    A_ub = np.vstack([S, np.concatenate([-gain, [0.0]])])
    b_ub = np.concatenate([np.zeros(L), [-opt + tol * max(1.0, abs(opt))]])
    res2 = _lp(np.concatenate([np.zeros(nv), [-1.0]]), A_ub, b_ub,
               np.hstack([Aeq, np.zeros((len(Aeq), 1))]), beq, bounds + [(None, 1.0)])
    x = res2.x[:nv] if res2.status == 0 else res.x
    zeta = (G @ x[:m + me]).reshape(L, d)
    return zeta, opt


def _glue(tree, t, g, zeta, other=None):
    """Leaf field: zeta / P(leaf|g) below g, ``other`` (or ones) elsewhere."""
    Y = np.ones((len(tree.leaves), tree.d)) if other is None else np.array(other, float)
    base = tree.leaves_under(g)
    Y[base] = zeta / (tree.leaf_prob[base] / tree.prob(g))[:, None]
    return Y


def _tangency(measure, pair, X, g, R):
    """(gap, contained): support of R along w(g) minus the penalized offset."""
    w, rhs = penalized_halfspace(pair, measure, X)[g]
    if rhs == -np.inf:
        return np.inf, True
    s = support(R, w)
    scale = max(1.0, float(np.abs(w).max()))
    return (s - rhs) / scale, s >= rhs - TOL_DUAL * scale


def facet_certificates(measure: RiskMeasure, X, t: int, glue=None, tol: float = TOL_DUAL,
                       values: RandomSet | None = None) -> list:
    """One LP-dual certificate (Q, w) per facet of every node polyhedron of R_t(X)."""
    tree = measure.tree
    X = as_claim(tree, X)
    R = values if values is not None else measure.evaluate(X, t)
    jobs = [(g, a, b) for g, P in R.items() if not P.is_empty for a, b in facets(P)]

    def one(job):
        g, a, b = job
        try:
            zeta, opt = _facet_dual(measure, X, t, g, a, b)
        except NotRepresentable:
            raise NotPolyhedral(f"{measure.name} has no polyhedral acceptance set") from None
        cert = {"node": g, "normal": a.tolist(), "offset": b, "certified": False}
        if zeta is None:
            return cert, None
        Y = _glue(tree, t, g, zeta, glue)
        pair = qw_from_yv(tree, Y, t=t, tol=tol)
        gap, ok = _tangency(measure, pair, X, g, R[g])
        cert.update({"dual_value": opt, "tangency_gap": float(gap),
                     "certified": bool(ok and abs(gap) <= tol)})
        return cert, pair

    return pmap(one, jobs)


def shp_facet_certificates(market: ConicalMarket, X, t: int, na=None,
                           tol: float = TOL_DUAL) -> list:
    """Consistent-pricing-process certificates for the facets of R_t(X) = SHP_t(-X).

    The LP dual of the support problem on the cone-sum acceptance set is a
    martingale Z below g with Z(n) in K(n)^+.  When it vanishes at some node it
    is mixed with a small multiple of a strictly consistent process, which keeps
    it within tol of tangency.
    """
    tree = market.tree
    measure = Superhedging(market)
    X = as_claim(tree, X)
    R = measure.evaluate(X, t)
    na = check_robust_no_arbitrage(market) if na is None else na
    glue = None
    if na.ok:
        glue = np.array([na.Z[h] for h in tree.leaves])
    out = []
    for cert, pair in facet_certificates(measure, X, t, glue, tol, values=R):
        cert["cpp_valid"] = False
        if pair is None:
            out.append(cert)
            continue
        g = cert["node"]
        Z = cpp_from_pair(pair, market, root=g, tol=tol)
        if not Z.validate(market, tol) and glue is not None:
            pair, Z, eps = _mix_strict(measure, market, pair, glue, X, g, R[g], tol)
            cert["mixed_eps"] = eps
            gap, ok = _tangency(measure, pair, X, g, R[g])
            cert["tangency_gap"] = float(gap)
            cert["certified"] = bool(ok and abs(gap) <= tol)
        w = market.project_eligible(t, Z.Z[g])
        a = market.project_eligible(t, np.asarray(cert["normal"]))
        cos = float(w @ a) / max(np.linalg.norm(w) * np.linalg.norm(a), 1e-300)
        cert["cpp_valid"] = bool(Z.validate(market, tol))
        cert["normal_aligned"] = cos >= 1.0 - 1e-6
        cert["certified"] = bool(cert["certified"] and cert["cpp_valid"])
        cert["Z"] = {n: z.tolist() for n, z in Z.Z.items()}
        cert["pair"] = pair
        out.append(cert)
    return out


def _mix_strict(measure, market, pair, glue, X, g, P, tol):
    """Y + eps * Y_strict with eps small enough to stay within tol of tangency."""
    tree, t = pair.tree, pair.t
    Y0 = pair.y()
    base = tree.leaves_under(g)
    strict = np.zeros_like(Y0)
    strict[base] = glue[base]
    # scale the strict part to the size of the certificate
    strict *= max(np.abs(Y0[base]).max(), 1e-12) / max(np.abs(glue[base]).max(), 1e-300)
    eps = 0.1 * tol
    for _ in range(30):
        Y = Y0.copy()
        Y[base] = Y0[base] + eps * strict[base]
        cand = qw_from_yv(tree, Y, t=t, tol=tol)
        Z = cpp_from_pair(cand, market, root=g, tol=tol)
        gap, ok = _tangency(measure, cand, X, g, P)
        if Z.validate(market, tol) and ok and abs(gap) <= tol:
            return cand, Z, eps
        eps *= 0.5
    return cand, Z, eps


# ---------------------------------------------------------------------------
# sampling and verification
# ---------------------------------------------------------------------------

def dirichlet_pairs(tree: ScenarioTree, n: int, t: int, rng, concentration: float = 50.0,
                    market: ConicalMarket | None = None) -> list:
    """Q from Dirichlet perturbations of P, w nonnegative and not orthogonal to M_t."""
    out = []
    while len(out) < n:
        q = np.column_stack([rng.dirichlet(concentration * tree.leaf_prob + 1e-3)
                             for _ in range(tree.d)])
        Q = VectorDensity(tree, q / tree.leaf_prob[:, None], tol=1e-8)
        w = rng.exponential(size=(tree.n_nodes(t), tree.d))
        pair = DualPair(Q, w, t)
        if pair.is_valid(market):
            out.append(pair)
    return out


def cpp_mixture_pairs(tree, processes: list, n: int, t: int, rng) -> list:
    """Pairs from random convex combinations of full consistent pricing processes."""
    Ys = [np.array([P.Z[h] for h in tree.leaves], float) for P in processes]
    out = []
    for _ in range(n):
        c = rng.dirichlet(np.ones(len(Ys)))
        Y = sum(ci * Yi for ci, Yi in zip(c, Ys))
        out.append(qw_from_yv(tree, Y, t=t, tol=TOL_DUAL))
    return out


def shp_pair_sampler(market: ConicalMarket, claims, t: int, n: int, seed=42) -> list:
    """Half mixtures of pricing-process certificates, half Dirichlet pairs."""
    rng = np.random.default_rng(seed)
    tree = market.tree
    na = check_robust_no_arbitrage(market)
    procs = []
    if na.ok:
        procs.append(PricingProcess({k: np.asarray(v) for k, v in na.Z.items()}))
        glue = np.array([na.Z[h] for h in tree.leaves])
        for X in claims:
            for cert in shp_facet_certificates(market, X, t, na):
                if cert.get("cpp_valid"):
                    # glue the local certificate to the strict one outside g
                    Y = glue.copy()
                    base = tree.leaves_under(cert["node"])
                    Y[base] = np.array([cert["Z"][tree.leaves[j]] for j in base])
                    Zfull = cpp_from_pair(qw_from_yv(tree, Y, t=t, tol=TOL_DUAL), market,
                                          tol=TOL_DUAL)
                    procs.append(Zfull)
    half = n // 2 if procs else 0
    pairs = cpp_mixture_pairs(tree, procs, half, t, rng) if procs else []
    pairs += dirichlet_pairs(tree, n - len(pairs), t, rng, market=market)
    return pairs


def avar_pair_sampler(measure: AVaR, t: int, n: int, seed=42, max_tries: int = 100000) -> list:
    """Pairs in the AV@R dual set, by Dirichlet sampling filtered on membership."""
    rng = np.random.default_rng(seed)
    tree = measure.tree
    out, tries = [], 0
    conc = 200.0
    while len(out) < n and tries < max_tries:
        tries += 1
        cand = dirichlet_pairs(tree, 1, t, rng, concentration=conc, market=measure.market)[0]
        if avar_dual_membership(cand, measure, measure.market, measure.market_compatible):
            out.append(cand)
        elif tries % 200 == 0:
            conc *= 2.0
    return out


def verify_dual_representation(measure: RiskMeasure, claims, pairs, t: int,
                               tol: float = TOL_DUAL, inner: bool = True) -> dict:
    """Outer containment for every pair and claim; facet coverage of the inner side."""
    tree = measure.tree
    claims = [as_claim(tree, X) for X in claims]
    values = [measure.evaluate(X, t) for X in claims]
    try:
        betas = pmap(lambda p: min_penalty(p, measure), pairs)
    except NotRepresentable:
        raise NotPolyhedral(f"{measure.name} has no polyhedral acceptance set") from None
    violations, checks = [], 0
    for k, (pair, beta) in enumerate(zip(pairs, betas)):
        for c, (X, R) in enumerate(zip(claims, values)):
            for g, (w, rhs) in penalized_halfspace(pair, measure, X, beta).items():
                if R[g].is_empty or rhs == -np.inf:
                    continue
                checks += 1
                s = support(R[g], w)
                scale = max(1.0, float(np.abs(w).max()))
                if s < rhs - tol * scale:
                    violations.append({"pair": k, "claim": c, "node": g,
                                       "support": s, "offset": rhs})
    report = {"t": t, "outer": {"pairs": len(pairs), "checks": checks,
                                "violations": violations}}
    ok = not violations
    if inner:
        certs = []
        for c, (X, R) in enumerate(zip(claims, values)):
            for cert, _ in facet_certificates(measure, X, t, tol=tol, values=R):
                cert["claim"] = c
                certs.append(cert)
        n_ok = sum(c["certified"] for c in certs)
        report["inner"] = {"facets": len(certs), "certified": n_ok,
                           "coverage": n_ok / len(certs) if certs else 1.0,
                           "uncertified": [c for c in certs if not c["certified"]]}
        ok = ok and n_ok == len(certs)
    report["verdict"] = "holds" if ok else "fails"
    return report

"""Conical market models: solvency cones, eligible subspaces, robust no-arbitrage."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .polytope import Polyhedron, intersect, _lp
from .tree import ScenarioTree, TOL_NUM

NA_EPS = 1e-6


class MarketError(ValueError):
    pass


class InvalidBidAsk(MarketError):
    pass


class NonpositivePrice(MarketError):
    pass


def cone_from_bid_ask(Pi, tol: float = 1e-12) -> Polyhedron:
    """Solvency cone generated by e^i and pi^{ij} e^i - e^j."""
    Pi = np.asarray(Pi, float)
    d = Pi.shape[0]
    if Pi.shape != (d, d):
        raise InvalidBidAsk("bid-ask matrix must be square")
    if np.any(np.abs(np.diag(Pi) - 1.0) > tol):
        raise InvalidBidAsk("diagonal entries must equal one")
    if np.any(Pi <= 0):
        raise InvalidBidAsk("entries must be positive")
    if np.any(Pi * Pi.T < 1.0 - 1e-12):
        raise InvalidBidAsk("need pi^{ij} >= 1 / pi^{ji}")
    gens = [np.eye(d)[i] for i in range(d)]
    for i in range(d):
        for j in range(d):
            if i != j:
                g = np.zeros(d)
                g[i] = Pi[i, j]
                g[j] = -1.0
                gens.append(g)
    return Polyhedron.cone(np.array(gens), dim=d)


def cone_from_price(S) -> Polyhedron:
    """Frictionless solvency cone {k : S.k >= 0}."""
    S = np.asarray(S, float).reshape(-1)
    if np.any(S <= 0):
        raise NonpositivePrice("prices must be strictly positive")
    return Polyhedron.from_h(S.reshape(1, -1), [0.0])


def _orthonormal(basis, d):
    B = np.asarray(basis, float).reshape(-1, d)
    if len(B) == 0:
        return np.zeros((0, d))
    u, s, vt = np.linalg.svd(B, full_matrices=False)
    rank = int(np.sum(s > 1e-10 * max(1.0, s.max())))
    return vt[:rank]


class ConicalMarket:
    """Per-node solvency cones and per-time eligible subspaces."""

    def __init__(self, tree: ScenarioTree, cones: dict, eligible: dict | None = None,
                 check: bool = True):
        self.tree = tree
        d = tree.d
        missing = [n for n in tree.nodes if n not in cones]
        if missing:
            raise MarketError(f"no solvency cone for nodes {missing[:5]}")
        self.cones = dict(cones)
        self.eligible = {}
        for t in range(tree.T + 1):
            basis = None if eligible is None else eligible.get(t, eligible.get(str(t)))
            self.eligible[t] = np.eye(d) if basis is None else _orthonormal(basis, d)
        if check:
            self.validate()

    def validate(self):
        d = self.tree.d
        for nid, K in self.cones.items():
            if K.dim != d:
                raise MarketError(f"cone at {nid!r} has wrong dimension")
            if not K.is_cone():
                raise MarketError(f"set at {nid!r} is not a cone")
            for i in range(d):
                if not K.contains(np.eye(d)[i]):
                    raise MarketError(f"cone at {nid!r} misses e^{i + 1}")
            if len(K.A) == 0:
                raise MarketError(f"cone at {nid!r} is the whole space")
        for t in range(self.tree.T + 1):
            Mp = self.positive_eligible(t)
            if len(Mp.rays) == 0:
                raise MarketError(f"(M_{t})_+ is trivial")

    # eligible spaces --------------------------------------------------------
    def eligible_basis(self, t: int) -> np.ndarray:
        return self.eligible[t]

    def eligible_complement(self, t: int) -> np.ndarray:
        """Rows spanning the orthogonal complement of M_t."""
        d = self.tree.d
        B = self.eligible[t]
        if len(B) == d:
            return np.zeros((0, d))
        q, _ = np.linalg.qr(np.column_stack([B.T, np.eye(d)]))
        return q[:, len(B):d].T

    def eligible_subspace(self, t: int) -> Polyhedron:
        return Polyhedron.subspace(self.eligible[t], dim=self.tree.d)

    def positive_eligible(self, t: int) -> Polyhedron:
        return intersect(self.eligible_subspace(t), Polyhedron.orthant(self.tree.d))

    def is_full(self, t: int) -> bool:
        return len(self.eligible[t]) == self.tree.d

    def project_eligible(self, t: int, x):
        B = self.eligible[t]
        return (np.asarray(x, float) @ B.T) @ B

    @property
    def nested(self) -> bool:
        """True when M_t is contained in M_{t+1} for every t."""
        for t in range(self.tree.T):
            B0, B1 = self.eligible[t], self.eligible[t + 1]
            if len(B0) and np.abs(B0 - (B0 @ B1.T) @ B1).max() > 1e-9:
                return False
        return True

    def cone(self, nid: str) -> Polyhedron:
        return self.cones[nid]

    def with_eligible(self, eligible) -> "ConicalMarket":
        return ConicalMarket(self.tree, self.cones, eligible)

    # serialization ------------------------------------------------------------
    @classmethod
    def from_dict(cls, tree: ScenarioTree, data: dict) -> "ConicalMarket":
        nodes = data.get("nodes", {})
        default = data.get("default")
        cones = {}
        for nid in tree.nodes:
            spec = nodes.get(nid, default)
            if spec is None:
                raise MarketError(f"market file has no entry for node {nid!r}")
            cones[nid] = _cone_from_spec(spec, tree.d)
        eligible = {}
        for key, spec in data.get("times", {}).items():
            if "eligible" in spec:
                eligible[int(key)] = spec["eligible"]
        if "eligible" in data:
            for key, basis in data["eligible"].items():
                eligible[int(key)] = basis
        return cls(tree, cones, eligible or None)

    @classmethod
    def load(cls, tree, path) -> "ConicalMarket":
        with open(path) as fh:
            return cls.from_dict(tree, json.load(fh))

    def to_dict(self) -> dict:
        return {
            "nodes": {nid: {"cone": K.to_dict()} for nid, K in self.cones.items()},
            "times": {str(t): {"eligible": B.tolist()} for t, B in self.eligible.items()},
        }

    @classmethod
    def uniform(cls, tree, cone: Polyhedron, eligible=None) -> "ConicalMarket":
        return cls(tree, {n: cone for n in tree.nodes}, eligible)

    @classmethod
    def no_trading(cls, tree, eligible=None) -> "ConicalMarket":
        """Market whose solvency cones are the positive orthant."""
        return cls.uniform(tree, Polyhedron.orthant(tree.d), eligible)


def _cone_from_spec(spec: dict, d: int) -> Polyhedron:
    if "bid_ask" in spec:
        return cone_from_bid_ask(spec["bid_ask"])
    if "price" in spec:
        return cone_from_price(spec["price"])
    if "cone" in spec:
        return Polyhedron.from_dict(spec["cone"])
    raise MarketError("node entry needs 'bid_ask', 'price' or 'cone'")


def solvent_eligible_cone(market: ConicalMarket, t: int, nid: str) -> Polyhedron:
    """K_t^{M_t}(g) = K(g) intersected with M_t."""
    K = market.cone(nid)
    if market.is_full(t):
        return K
    return intersect(K, market.eligible_subspace(t))


@dataclass
class NoArbitrageCertificate:
    ok: bool
    eps: float
    Z: dict = field(default_factory=dict)
    message: str = ""

    def to_dict(self) -> dict:
        return {"ok": self.ok, "eps": self.eps, "message": self.message,
                "Z": {k: [float(x) for x in v] for k, v in self.Z.items()}}


def _generators(K: Polyhedron):
    """Normalized rays of K, each flagged True when it is not in -K."""
    out = []
    for r in K.rays.astype(float):
        r = r / np.linalg.norm(r)
        out.append((r, not K.contains(-r, tol=1e-9)))
    return out


def check_robust_no_arbitrage(market: ConicalMarket, eps: float = NA_EPS) -> NoArbitrageCertificate:
    """Search a strictly consistent pricing process by LP.

    Unknowns Z_t(g) in R^d per node with the martingale identity, Z(g).r >= eps
    for every generator r of K(g) outside -K(g), Z(g).r >= 0 for the others,
    and the normalization Z_0 . 1 = 1.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    tree = market.tree
    d = tree.d
    ids = [n for t in range(tree.T + 1) for n in tree.layer(t)]
    pos = {n: i for i, n in enumerate(ids)}
    nv = len(ids) * d
    A_ub, b_ub, A_eq, b_eq = [], [], [], []
    for n in ids:
        for r, strict in _generators(market.cone(n)):
            row = np.zeros(nv)
            row[pos[n] * d:(pos[n] + 1) * d] = -r
            A_ub.append(row)
            b_ub.append(-eps if strict else 0.0)
        for i in range(d):
            if tree.children(n):
                row = np.zeros(nv)
                row[pos[n] * d + i] = 1.0
                for c in tree.children(n):
                    row[pos[c] * d + i] -= tree.nodes[c].q
                A_eq.append(row)
                b_eq.append(0.0)
    row = np.zeros(nv)
    row[pos[tree.root] * d:(pos[tree.root] + 1) * d] = 1.0
    A_eq.append(row)
    b_eq.append(1.0)
    res = _lp(np.zeros(nv), np.array(A_ub), np.array(b_ub), np.array(A_eq), np.array(b_eq))
    if res.status != 0:
        return NoArbitrageCertificate(False, eps, {}, "no strictly consistent pricing "
                                      f"process with margin {eps}")
    Z = {n: res.x[pos[n] * d:(pos[n] + 1) * d].copy() for n in ids}
    return NoArbitrageCertificate(True, eps, Z, "certified")


def verify_pricing_process(market: ConicalMarket, Z: dict, t0: int = 0,
                           root: str | None = None, tol: float = 1e-7) -> bool:
    """Martingale identity and dual-cone membership of Z on a subtree."""
    tree = market.tree
    nodes = tree.subtree(root) if root is not None else [
        n for t in range(t0, tree.T + 1) for n in tree.layer(t)]
    for n in nodes:
        z = np.asarray(Z[n], float)
        # K(n)^+ lies in the orthant, so a nonzero element has a positive entry
        if not np.any(z > 0):
            return False
        K = market.cone(n)
        if np.any(K.rays.astype(float) @ z < -tol * max(1.0, np.abs(z).max())):
            return False
        ch = tree.children(n)
        if ch:
            avg = sum(tree.nodes[c].q * np.asarray(Z[c], float) for c in ch)
            if np.abs(avg - z).max() > tol * max(1.0, np.abs(z).max()):
                return False
    return True

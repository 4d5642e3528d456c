"""Finite scenario trees, adapted vectors and conditional expectations."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

TOL_PROB = 1e-9
TOL_NUM = 1e-9


class TreeError(ValueError):
    pass


class NonUniformDepth(TreeError):
    pass


class ProbabilityMismatch(TreeError):
    pass


class OrphanNode(TreeError):
    pass


class ZeroProbability(TreeError):
    pass


class TimeOrder(TreeError):
    pass


class DensityInvalid(TreeError):
    pass


@dataclass
class Node:
    id: str
    t: int
    parent: str | None
    q: float
    children: list = field(default_factory=list)
    prob: float = 1.0


class ScenarioTree:
    """Rooted tree of uniform depth T carrying d assets.

    Nodes are stored per time layer; ``layer(t)`` gives the ids at time t in a
    fixed order which is used for every array indexed by time-t nodes.
    """

    def __init__(self, T: int, d: int, nodes, tol: float = TOL_PROB):
        if int(T) < 1 or int(d) < 1:
            raise TreeError("T and d must be positive integers")
        self.T = int(T)
        self.d = int(d)
        self.tol = tol
        self.nodes: dict[str, Node] = {}
        for n in nodes:
            if isinstance(n, dict):
                n = Node(str(n["id"]), int(n["t"]),
                         None if n.get("parent") is None else str(n["parent"]),
                         float(n.get("q", 1.0)))
            if n.id in self.nodes:
                raise TreeError(f"duplicate node id {n.id!r}")
            self.nodes[n.id] = Node(n.id, n.t, n.parent, float(n.q))
        self._link()

    def _link(self):
        roots = [n for n in self.nodes.values() if n.parent is None]
        if len(roots) != 1:
            raise OrphanNode(f"expected exactly one root, found {len(roots)}")
        self.root = roots[0].id
        if roots[0].t != 0:
            raise TreeError("root must sit at time 0")
        for n in self.nodes.values():
            if n.parent is None:
                continue
            if n.parent not in self.nodes:
                raise OrphanNode(f"node {n.id!r} has unknown parent {n.parent!r}")
            p = self.nodes[n.parent]
            if n.t != p.t + 1:
                raise TreeError(f"node {n.id!r} time does not follow its parent")
            if not n.q > 0:
                raise ZeroProbability(f"node {n.id!r} has q = {n.q}")
            p.children.append(n.id)
        # sorted children keep layer order independent of input order
        for n in self.nodes.values():
            n.children.sort(key=_natural_key)
        self._layers = [[] for _ in range(self.T + 1)]
        seen = set()
        # breadth-first so that layers inherit the parent ordering
        queue = [self.root]
        while queue:
            nxt = []
            for nid in queue:
                seen.add(nid)
                node = self.nodes[nid]
                if node.t > self.T:
                    raise NonUniformDepth(f"node {nid!r} deeper than T")
                self._layers[node.t].append(nid)
                if node.parent is not None:
                    node.prob = self.nodes[node.parent].prob * node.q
                nxt.extend(node.children)
            queue = nxt
        if len(seen) != len(self.nodes):
            raise OrphanNode("some nodes are not reachable from the root")
        for n in self.nodes.values():
            if n.children:
                s = sum(self.nodes[c].q for c in n.children)
                if abs(s - 1.0) > self.tol:
                    raise ProbabilityMismatch(
                        f"successors of {n.id!r} sum to {s}")
            elif n.t != self.T:
                raise NonUniformDepth(f"leaf {n.id!r} at time {n.t} != T")
            if n.prob <= 0:
                raise ZeroProbability(f"node {n.id!r} has zero probability")
        self._index = {}
        for t, layer in enumerate(self._layers):
            for i, nid in enumerate(layer):
                self._index[nid] = i
        # ancestor index table: anc[t][j] = index of the time-t ancestor of leaf j
        nl = len(self.leaves)
        self._anc = np.zeros((self.T + 1, nl), dtype=int)
        for j, leaf in enumerate(self.leaves):
            nid = leaf
            for t in range(self.T, -1, -1):
                self._anc[t, j] = self._index[nid]
                nid = self.nodes[nid].parent
        self._leaf_prob = np.array([self.nodes[h].prob for h in self.leaves])

    # basic accessors -----------------------------------------------------
    def layer(self, t: int) -> list[str]:
        return self._layers[t]

    @property
    def leaves(self) -> list[str]:
        return self._layers[self.T]

    def index(self, nid: str) -> int:
        return self._index[nid]

    def time(self, nid: str) -> int:
        return self.nodes[nid].t

    def prob(self, nid: str) -> float:
        return self.nodes[nid].prob

    def children(self, nid: str) -> list[str]:
        return self.nodes[nid].children

    def parent(self, nid: str) -> str | None:
        return self.nodes[nid].parent

    @property
    def leaf_prob(self) -> np.ndarray:
        return self._leaf_prob

    def ancestor_index(self, t: int) -> np.ndarray:
        """Index of the time-t ancestor of every leaf."""
        return self._anc[t]

    def ancestor(self, nid: str, t: int) -> str:
        node = self.nodes[nid]
        if t > node.t:
            raise TimeOrder("ancestor time after node time")
        while node.t > t:
            node = self.nodes[node.parent]
        return node.id

    def leaves_under(self, nid: str) -> np.ndarray:
        """Positions (in leaf order) of the leaves below ``nid``."""
        t = self.time(nid)
        return np.flatnonzero(self._anc[t] == self._index[nid])

    def descendants(self, nid: str, s: int) -> list[str]:
        t = self.time(nid)
        if s < t:
            raise TimeOrder("descendant time before node time")
        out = [nid]
        for _ in range(s - t):
            out = [c for n in out for c in self.nodes[n].children]
        return out

    def subtree(self, nid: str) -> list[str]:
        out, frontier = [], [nid]
        while frontier:
            out.extend(frontier)
            frontier = [c for n in frontier for c in self.nodes[n].children]
        return out

    def path(self, leaf: str) -> list[str]:
        out = [leaf]
        while self.nodes[out[-1]].parent is not None:
            out.append(self.nodes[out[-1]].parent)
        return out[::-1]

    def n_nodes(self, t: int | None = None) -> int:
        return len(self.nodes) if t is None else len(self._layers[t])

    def cond_prob(self, t: int) -> np.ndarray:
        """Matrix C with C[g, j] = P(leaf j | time-t node g)."""
        anc = self._anc[t]
        node_prob = np.array([self.nodes[n].prob for n in self._layers[t]])
        C = np.zeros((len(self._layers[t]), len(self.leaves)))
        C[anc, np.arange(len(self.leaves))] = self._leaf_prob / node_prob[anc]
        return C

    def layer_map(self, t: int, s: int) -> np.ndarray:
        """For each time-s node, the index of its time-t ancestor (t <= s)."""
        if t > s:
            raise TimeOrder("t must not exceed s")
        return np.array([self._index[self.ancestor(n, t)] for n in self._layers[s]],
                        dtype=int)

    # serialization ------------------------------------------------------
    def to_dict(self) -> dict:
        nodes = []
        for t in range(self.T + 1):
            for nid in self._layers[t]:
                n = self.nodes[nid]
                nodes.append({"id": n.id, "parent": n.parent, "t": n.t, "q": n.q})
        return {"T": self.T, "d": self.d, "nodes": nodes}

    @classmethod
    def from_dict(cls, data: dict, tol: float = TOL_PROB) -> "ScenarioTree":
        try:
            return cls(data["T"], data["d"], data["nodes"], tol=tol)
        except KeyError as exc:
            raise TreeError(f"missing key {exc}") from None

    @classmethod
    def load(cls, path) -> "ScenarioTree":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def __repr__(self):
        return f"ScenarioTree(T={self.T}, d={self.d}, nodes={len(self.nodes)})"


def _natural_key(s: str):
    import re
    return [int(p) if p.isdigit() else p for p in re.split(r"(\d+)", s)]


def build_tree(spec, tol: float = TOL_PROB) -> ScenarioTree:
    """Validate a tree description (dict or path) and return the tree."""
    if isinstance(spec, ScenarioTree):
        return spec
    if isinstance(spec, dict):
        return ScenarioTree.from_dict(spec, tol=tol)
    return ScenarioTree.load(spec)


def uniform_tree(T: int, branches, d: int, probs=None) -> ScenarioTree:
    """Recombination-free tree with a fixed branching (int or per-time list).

    Node ids encode the path, e.g. ``"0.1.0"``; the root is ``"r"``.
    """
    if isinstance(branches, int):
        branches = [branches] * T
    nodes = [{"id": "r", "parent": None, "t": 0, "q": 1.0}]
    frontier = ["r"]
    for t in range(T):
        b = branches[t]
        q = [1.0 / b] * b if probs is None else list(probs[t] if np.ndim(probs) > 1 else probs)
        nxt = []
        for p in frontier:
            for k in range(b):
                nid = f"{p}.{k}" if p != "r" else f"{k}"
                nodes.append({"id": nid, "parent": p, "t": t + 1, "q": q[k]})
                nxt.append(nid)
        frontier = nxt
    return ScenarioTree(T, d, nodes)


def random_tree(rng, T: int, max_branch: int, d: int) -> ScenarioTree:
    """Random uniform-depth tree with 2..max_branch successors per node."""
    nodes = [{"id": "r", "parent": None, "t": 0, "q": 1.0}]
    frontier = ["r"]
    for t in range(T):
        nxt = []
        for p in frontier:
            b = int(rng.integers(2, max_branch + 1))
            q = rng.dirichlet(np.full(b, 2.0))
            q = np.maximum(q, 0.05)
            q = q / q.sum()
            for k in range(b):
                nid = f"{p}.{k}" if p != "r" else f"{k}"
                nodes.append({"id": nid, "parent": p, "t": t + 1, "q": float(q[k])})
                nxt.append(nid)
        frontier = nxt
    return ScenarioTree(T, d, nodes)


class AdaptedVector:
    """Values of an F_t-measurable random vector, one d-vector per time-t node."""

    def __init__(self, tree: ScenarioTree, t: int, values):
        values = np.asarray(values, dtype=float)
        n = tree.n_nodes(t)
        if values.ndim == 1 and tree.d == 1:
            values = values.reshape(-1, 1)
        if values.shape != (n, tree.d):
            raise ValueError(f"expected shape {(n, tree.d)}, got {values.shape}")
        self.tree = tree
        self.t = t
        self.values = values
        self.values.setflags(write=False)

    @classmethod
    def from_dict(cls, tree, t, mapping: dict) -> "AdaptedVector":
        layer = tree.layer(t)
        missing = [n for n in layer if n not in mapping]
        if missing:
            raise ValueError(f"missing values for nodes {missing[:5]}")
        return cls(tree, t, [mapping[n] for n in layer])

    @classmethod
    def constant(cls, tree, t, c) -> "AdaptedVector":
        return cls(tree, t, np.tile(np.asarray(c, float), (tree.n_nodes(t), 1)))

    def to_dict(self) -> dict:
        return {n: [float(v) for v in self.values[i]]
                for i, n in enumerate(self.tree.layer(self.t))}

    def __getitem__(self, nid):
        return self.values[self.tree.index(nid)]

    def extend(self, s: int) -> "AdaptedVector":
        """Same random vector viewed at a later time s."""
        return AdaptedVector(self.tree, s, self.values[self.tree.layer_map(self.t, s)])

    def __add__(self, other):
        other = _as_values(other, self)
        return AdaptedVector(self.tree, self.t, self.values + other)

    def __sub__(self, other):
        other = _as_values(other, self)
        return AdaptedVector(self.tree, self.t, self.values - other)

    def __neg__(self):
        return AdaptedVector(self.tree, self.t, -self.values)

    def __mul__(self, s):
        s = np.asarray(s, float)
        if s.ndim == 1 and s.shape[0] == self.values.shape[0]:
            s = s[:, None]
        return AdaptedVector(self.tree, self.t, self.values * s)

    __rmul__ = __mul__

    def __repr__(self):
        return f"AdaptedVector(t={self.t}, shape={self.values.shape})"


def _as_values(other, ref: AdaptedVector):
    if isinstance(other, AdaptedVector):
        if other.t != ref.t:
            other = other.extend(ref.t)
        return other.values
    return np.asarray(other, float)


def as_claim(tree: ScenarioTree, X) -> AdaptedVector:
    """Coerce an array, dict or adapted vector into a terminal claim."""
    if isinstance(X, AdaptedVector):
        return X if X.t == tree.T else X.extend(tree.T)
    if isinstance(X, dict):
        return AdaptedVector.from_dict(tree, tree.T, X)
    return AdaptedVector(tree, tree.T, X)


def cond_expectation_P(X: AdaptedVector, t: int) -> AdaptedVector:
    """E[X | F_t] for X adapted at time s >= t."""
    tree = X.tree
    s = X.t
    if t > s:
        raise TimeOrder(f"cannot condition a time-{s} vector on F_{t}")
    if t == s:
        return X
    anc = tree.layer_map(t, s)
    prob_s = np.array([tree.prob(n) for n in tree.layer(s)])
    prob_t = np.array([tree.prob(n) for n in tree.layer(t)])
    out = np.zeros((tree.n_nodes(t), tree.d))
    np.add.at(out, anc, X.values * prob_s[:, None])
    return AdaptedVector(tree, t, out / prob_t[:, None])


class VectorDensity:
    """Leaf-indexed densities dQ_i/dP of a vector probability measure."""

    def __init__(self, tree: ScenarioTree, density, tol: float = TOL_PROB):
        D = np.asarray(density, dtype=float)
        if D.shape != (len(tree.leaves), tree.d):
            raise DensityInvalid(f"density must have shape {(len(tree.leaves), tree.d)}")
        if np.any(D < -tol):
            raise DensityInvalid("densities must be nonnegative")
        D = np.maximum(D, 0.0)
        mean = tree.leaf_prob @ D
        if np.any(np.abs(mean - 1.0) > tol):
            raise DensityInvalid(f"densities must have expectation one, got {mean}")
        self.tree = tree
        self.density = D
        self.density.setflags(write=False)

    @classmethod
    def identity(cls, tree) -> "VectorDensity":
        return cls(tree, np.ones((len(tree.leaves), tree.d)))

    @classmethod
    def from_measures(cls, tree, qleaf) -> "VectorDensity":
        """From leaf probabilities of each Q_i (array leaves x d)."""
        return cls(tree, np.asarray(qleaf, float) / tree.leaf_prob[:, None])

    def cond(self, t: int) -> np.ndarray:
        """E[dQ/dP | F_t] per time-t node (array n_t x d)."""
        X = AdaptedVector(self.tree, self.tree.T, self.density)
        return cond_expectation_P(X, t).values

    def xi(self, s: int) -> np.ndarray:
        """One-step transition densities at time-s nodes (s >= 1)."""
        num = self.cond(s)
        den = self.cond(s - 1)[self.tree.layer_map(s - 1, s)]
        out = np.ones_like(num)
        pos = den > 0
        out[pos] = num[pos] / den[pos]
        return out

    def weights(self, t: int) -> np.ndarray:
        """W with E^Q[X|F_t](g)_i = sum_j W[g, j, i] X(j)_i, built from xi."""
        tree = self.tree
        w = np.ones((len(tree.leaves), tree.d))
        for s in range(t + 1, tree.T + 1):
            q = np.array([tree.nodes[n].q for n in tree.layer(s)])
            step = self.xi(s) * q[:, None]
            w = w * step[tree.ancestor_index(s)]
        out = np.zeros((tree.n_nodes(t), len(tree.leaves), tree.d))
        anc = tree.ancestor_index(t)
        out[anc, np.arange(len(tree.leaves))] = w
        return out

    def to_dict(self) -> dict:
        return {str(i): {h: float(self.density[j, i]) for j, h in enumerate(self.tree.leaves)}
                for i in range(self.tree.d)}

    @classmethod
    def from_dict(cls, tree, data: dict) -> "VectorDensity":
        D = np.zeros((len(tree.leaves), tree.d))
        for key, col in data.items():
            i = int(key)
            for j, h in enumerate(tree.leaves):
                D[j, i] = float(col[h])
        return cls(tree, D)


def cond_expectation_Q(X: AdaptedVector, Q: VectorDensity, t: int) -> AdaptedVector:
    """Component-wise E^{Q_i}[X_i | F_t] using one-step transition densities."""
    tree = X.tree
    if X.t != tree.T:
        X = X.extend(tree.T)
    if t > tree.T:
        raise TimeOrder("t beyond horizon")
    W = Q.weights(t)
    return AdaptedVector(tree, t, np.einsum("gji,ji->gi", W, X.values))

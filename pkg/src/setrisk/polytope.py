"""Polyhedral kernel.

Polyhedra are held in both representations: H = {x : A x >= b} and
V = conv(vertices) + cone(rays). Lines are stored as pairs of opposite rays and
equalities as pairs of opposite halfspaces. Conversion uses the double
description method on the homogenized cone; every constructor canonicalizes
through H -> V -> H (or V -> H -> V) so that both representations are minimal.

``Lifted`` describes projections {x : exists y, A_x x + A_y y >= b, ...}; it is
converted to a ``Polyhedron`` by an outer-approximation cutting plane loop.
"""
from __future__ import annotations

import logging
from fractions import Fraction

import numpy as np
from scipy.optimize import linprog

log = logging.getLogger(__name__)

TOL_GEO = 1e-8
EPS_DD = 1e-9


class PolytopeError(ValueError):
    pass


class DimMismatch(PolytopeError):
    pass


class EmptySubtrahend(PolytopeError):
    pass


class EmptyPolyhedron(PolytopeError):
    pass


class NumericalFailure(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# double description
# ---------------------------------------------------------------------------

def _to_exact(M):
    M = np.asarray(M, dtype=object)
    out = np.empty(M.shape, dtype=object)
    for idx, v in np.ndenumerate(M):
        out[idx] = v if isinstance(v, Fraction) else Fraction(v).limit_denominator(10**12)
    return out


def _normalize_rows(M, exact):
    if len(M) == 0:
        return M
    if exact:
        out = M.copy()
        for i in range(len(out)):
            m = max(abs(v) for v in out[i])
            if m != 0:
                out[i] = out[i] / m
        return out
    nrm = np.linalg.norm(M, axis=1)
    nrm[nrm == 0] = 1.0
    return M / nrm[:, None]


def cone_dd(A, exact: bool = False, eps: float = EPS_DD):
    """Generators of the cone {y : A y >= 0}.

    Returns (lineality, rays) as row arrays. Constraints are added in index
    order; ties in lineality pivots pick the lowest index of maximal weight.
    """
    A = _to_exact(A) if exact else np.asarray(A, dtype=float)
    m, n = A.shape
    A = _normalize_rows(A, exact)
    if exact:
        L = np.array([[Fraction(int(i == j)) for j in range(n)] for i in range(n)],
                     dtype=object).reshape(n, n)
        zero = lambda v: v == 0
        pos = lambda v: v > 0
    else:
        L = np.eye(n)
        zero = lambda v: np.abs(v) <= eps
        pos = lambda v: v > eps
    R = np.zeros((0, n), dtype=object if exact else float)
    Z = np.zeros((0, m), dtype=bool)
    for i in range(m):
        a = A[i]
        if np.all(zero(a)):
            Z[:, i] = True
            continue
        aL = L.dot(a) if len(L) else np.zeros(0)
        nz = ~zero(aL) if len(L) else np.zeros(0, dtype=bool)
        if nz.any():
            if exact:
                j = int(np.flatnonzero(nz)[0])
            else:
                w = np.where(nz, np.abs(aL), -1.0)
                j = int(np.argmax(w))
            l = L[j] if pos(aL[j]) else -L[j]
            al = l.dot(a)
            rest = np.delete(L, j, axis=0)
            if len(rest):
                rest = rest - np.outer(rest.dot(a) / al, l)
                if not exact:
                    # re-orthonormalize the remaining lineality basis
                    q, r = np.linalg.qr(rest.T)
                    keep = np.abs(np.diag(r)) > eps
                    rest = q[:, keep].T
            L = rest
            if len(R):
                R = R - np.outer(R.dot(a) / al, l)
                R = _normalize_rows(R, exact)
            Z[:, i] = True
            zrow = np.zeros((1, m), dtype=bool)
            zrow[0, :i] = True
            l = _normalize_rows(l.reshape(1, -1), exact)
            R = np.vstack([R, l]) if len(R) else l
            Z = np.vstack([Z, zrow])
            continue
        if len(R) == 0:
            continue
        s = R.dot(a)
        ps = pos(s)
        ng = pos(-s)
        zr = ~(ps | ng)
        Z[zr, i] = True
        P_idx = np.flatnonzero(ps)
        N_idx = np.flatnonzero(ng)
        new_rays, new_Z = [], []
        need = n - len(L) - 2
        if len(P_idx) and len(N_idx):
            Zc = Z[:, :i].astype(np.int32)
            for p in P_idx:
                common = Z[p, :i] & Z[N_idx, :i]
                cnt = common.sum(axis=1)
                cand = np.flatnonzero(cnt >= need)
                if len(cand) == 0:
                    continue
                common = common[cand]
                # rays whose incidence contains the common set
                sup = common.astype(np.int32).dot(Zc.T) == cnt[cand][:, None]
                nsup = sup.sum(axis=1)
                for k, c in enumerate(cand):
                    if nsup[k] != 2:
                        continue
                    q = N_idx[c]
                    r = s[p] * R[q] - s[q] * R[p]
                    new_rays.append(r)
                    zrow = np.zeros(m, dtype=bool)
                    zrow[:i] = common[k]
                    zrow[i] = True
                    new_Z.append(zrow)
        keep = ps | zr
        R = R[keep]
        Z = Z[keep]
        if new_rays:
            NR = _normalize_rows(np.array(new_rays, dtype=object if exact else float), exact)
            R = np.vstack([R, NR]) if len(R) else NR
            Z = np.vstack([Z, np.array(new_Z)])
    if not exact and len(R):
        R = _dedupe(R, eps)
    return L, R


def _dedupe(M, eps):
    """Drop rows within 10 eps (max-norm) of an earlier kept row."""
    if len(M) <= 1:
        return M
    F = np.asarray(M, dtype=float)
    kept = np.empty_like(F)
    keep, k = [], 0
    for i in range(len(F)):
        if k == 0 or np.abs(kept[:k] - F[i]).max(axis=1).min() > 10 * eps:
            kept[k] = F[i]
            k += 1
            keep.append(i)
    return M[keep]


def _h_to_v(A, b, exact, eps):
    n = A.shape[1]
    lift = np.zeros((len(A) + 1, n + 1), dtype=object if exact else float)
    lift[0, n] = 1
    if len(A):
        lift[1:, :n] = A
        lift[1:, n] = -b
    L, R = cone_dd(lift, exact=exact, eps=eps)
    pts, rays = [], []
    for r in R:
        s = r[n]
        if (s > 0) if exact else (s > eps):
            pts.append(r[:n] / s)
        else:
            rays.append(r[:n])
    for l in L:
        rays.append(l[:n])
        rays.append(-l[:n])
    dt = object if exact else float
    V = np.array(pts, dtype=dt).reshape(-1, n)
    Rr = _normalize_rows(np.array(rays, dtype=dt).reshape(-1, n), exact)
    if not exact:
        V = _clean(_dedupe(_polish_vertices(A.astype(float), b.astype(float), V), eps))
        Rr = _clean(_dedupe(Rr, eps))
    return V, Rr


POLISH_TOL = 1e-7


def _polish_vertices(A, b, V):
    """Re-solve each vertex from its active constraints.

    Long chains of ray combinations in the DD loop lose digits when facets are
    nearly parallel; the active system itself is usually much better conditioned.
    """
    if len(A) == 0 or len(V) == 0:
        return V
    n = A.shape[1]
    out = V.copy()
    for i, v in enumerate(V):
        scale = max(1.0, float(np.abs(v).max()))
        res = A @ v - b
        act = np.abs(res) <= POLISH_TOL * scale
        if act.sum() < n:
            continue
        Aa, ba = A[act], b[act]
        w, _, rank, _ = np.linalg.lstsq(Aa, ba, rcond=None)
        if rank < n or np.abs(w - v).max() > 10 * POLISH_TOL * scale:
            continue
        if np.abs(Aa @ w - ba).max() > 1e-11 * scale:
            continue                                # active set not consistent
        if np.minimum(A @ w - b, 0).min() >= np.minimum(res, 0).min():
            out[i] = w
    return out


def _facets_by_incidence(A, b, V, R):
    """Irredundant rows of {A x >= b} for a full-dimensional polyhedron.

    A row is a facet iff its tight generators, homogenized, have rank dim.
    Returns None when the polyhedron is not full-dimensional; the DD route then
    supplies the equalities.  Much cheaper than a second DD pass in high dim.
    """
    n = A.shape[1]
    G = np.vstack([np.column_stack([V, np.ones(len(V))]),
                   np.column_stack([R, np.zeros(len(R))])])
    if np.linalg.matrix_rank(G, tol=1e-9) < n + 1:
        return None
    nrm = np.linalg.norm(A, axis=1)
    ok = nrm > 1e-12
    A, b = A[ok] / nrm[ok, None], b[ok] / nrm[ok]
    scale = max(1.0, float(np.abs(V).max()))
    Rn = R / np.linalg.norm(R, axis=1, keepdims=True) if len(R) else R
    keep = []
    for i, (a, off) in enumerate(zip(A, b)):
        tight = np.r_[np.abs(V @ a - off) <= POLISH_TOL * scale,
                      np.abs(Rn @ a) <= POLISH_TOL if len(R) else np.zeros(0, bool)]
        if tight.sum() >= n and np.linalg.matrix_rank(G[tight], tol=1e-9) == n:
            keep.append(i)
    Ab = np.column_stack([A[keep], b[keep]]).reshape(-1, n + 1)
    Ab = _dedupe(Ab, EPS_DD)
    return _clean(Ab[:, :n]), _clean(Ab[:, n])


def _polish_facets(A, b, V, R):
    """Refit each facet through its incident generators; offsets from the data."""
    n = A.shape[1]
    A2, b2 = A.copy(), b.copy()
    for i, (a, off) in enumerate(zip(A, b)):
        scale = max(1.0, float(np.abs(V).max()))
        inc_v = V[np.abs(V @ a - off) <= POLISH_TOL * scale]
        inc_r = R[np.abs(R @ a) <= POLISH_TOL] if len(R) else R
        M = np.vstack([np.column_stack([inc_v, -np.ones(len(inc_v))]),
                       np.column_stack([inc_r, np.zeros(len(inc_r))])])
        cand = a
        if len(M) >= n:
            _, sv, Vt = np.linalg.svd(M)
            if len(sv) >= n and sv[n - 1] > 1e-6 * max(sv[0], 1.0):
                x = Vt[-1]
                an = x[:n]
                nrm = np.linalg.norm(an)
                if nrm > 0:
                    an = an / nrm
                    an = an if an @ a > 0 else -an
                    if np.abs(an - a).max() <= 10 * POLISH_TOL and \
                            (len(R) == 0 or (R @ an).min() >= -1e-12):
                        cand = an
        A2[i] = cand
        b2[i] = (V @ cand).min()
    return A2, b2


def _v_to_h(V, R, exact, eps):
    n = V.shape[1]
    dt = object if exact else float
    rows = np.zeros((len(V) + len(R), n + 1), dtype=dt)
    rows[:len(V), :n] = V
    rows[:len(V), n] = 1
    rows[len(V):, :n] = R
    L, G = cone_dd(rows, exact=exact, eps=eps)
    gens = list(G) + [l for l in L] + [-l for l in L]
    A, b = [], []
    for g in gens:
        a = g[:n]
        if (all(v == 0 for v in a)) if exact else (np.max(np.abs(a)) <= eps):
            continue
        A.append(a)
        b.append(-g[n])
    A = np.array(A, dtype=dt).reshape(-1, n)
    b = np.array(b, dtype=dt)
    if len(A):
        if exact:
            for i in range(len(A)):
                m = max(abs(v) for v in A[i])
                A[i] = A[i] / m
                b[i] = b[i] / m
        else:
            nrm = np.linalg.norm(A, axis=1)
            A = A / nrm[:, None]
            b = b / nrm
            Rn = R.astype(float)
            if len(Rn):
                Rn = Rn / np.linalg.norm(Rn, axis=1, keepdims=True)
            A, b = _polish_facets(A, b, V.astype(float), Rn)
            Ab = _dedupe(np.column_stack([A, b]), eps)
            A, b = _clean(Ab[:, :n]), _clean(Ab[:, n])
    if len(A):
        # the homogenizing facet s >= 0 may come back with a nonzero normal when
        # its representative is shifted along the lineality; it touches no vertex
        if exact:
            keep = [i for i in range(len(A)) if any(A[i].dot(v) == b[i] for v in V)]
        else:
            scale = max(1.0, float(np.abs(V).max()))
            keep = np.flatnonzero((A @ V.T - b[:, None]).min(axis=1) <= 10 * eps * scale)
        A, b = A[keep], b[keep]
    return A, b


def _clean(M, tiny=1e-13):
    M = np.array(M, dtype=float)
    M[np.abs(M) < tiny] = 0.0
    return M


# ---------------------------------------------------------------------------
# Polyhedron
# ---------------------------------------------------------------------------

class Polyhedron:
    """Convex polyhedron in R^dim with synchronized H- and V-representations.

    Build with ``from_h`` or ``from_v``; instances are immutable.
    """

    def __init__(self, dim, A, b, vertices, rays, exact=False):
        self.dim = int(dim)
        self.exact = exact
        dt = object if exact else float
        self.A = np.array(A, dtype=dt).reshape(-1, self.dim)
        self.b = np.array(b, dtype=dt).reshape(-1)
        self.vertices = np.array(vertices, dtype=dt).reshape(-1, self.dim)
        self.rays = np.array(rays, dtype=dt).reshape(-1, self.dim)
        for arr in (self.A, self.b, self.vertices, self.rays):
            arr.setflags(write=False)

    # constructors ---------------------------------------------------------
    @classmethod
    def from_h(cls, A, b, dim=None, exact=False, eps=EPS_DD) -> "Polyhedron":
        if dim is None:
            dim = np.asarray(A).shape[1]
        A = np.asarray(A, dtype=object if exact else float).reshape(-1, dim)
        b = np.asarray(b, dtype=object if exact else float).reshape(-1)
        if exact:
            A, b = _to_exact(A), _to_exact(b)
        V, R = _h_to_v(A, b, exact, eps)
        if len(V) == 0:
            return cls.empty(dim, exact)
        fac = None if exact else _facets_by_incidence(A.astype(float), b.astype(float), V, R)
        A2, b2 = fac if fac is not None else _v_to_h(V, R, exact, eps)
        return cls(dim, A2, b2, V, R, exact)

    @classmethod
    def from_v(cls, vertices, rays=None, dim=None, exact=False, eps=EPS_DD) -> "Polyhedron":
        V = np.asarray(vertices, dtype=object if exact else float)
        if dim is None:
            dim = V.shape[1] if V.ndim == 2 and V.size else np.asarray(rays).shape[1]
        V = V.reshape(-1, dim)
        R = np.zeros((0, dim)) if rays is None else np.asarray(rays, dtype=object if exact else float)
        R = R.reshape(-1, dim)
        if exact:
            V, R = _to_exact(V), _to_exact(R)
        if len(V) == 0:
            return cls.empty(dim, exact)
        if not exact:
            R = R[np.linalg.norm(R, axis=1) > eps] if len(R) else R
        A, b = _v_to_h(V, R, exact, eps)
        V2, R2 = _h_to_v(A, b, exact, eps)
        if len(V2) == 0:
            raise NumericalFailure("V-representation collapsed to the empty set")
        return cls(dim, A, b, V2, R2, exact)

    @classmethod
    def empty(cls, dim, exact=False) -> "Polyhedron":
        A = np.zeros((1, dim), dtype=object if exact else float)
        if exact:
            A = _to_exact(A)
        one = Fraction(1) if exact else 1.0
        return cls(dim, A, [one], np.zeros((0, dim)), np.zeros((0, dim)), exact)

    @classmethod
    def whole(cls, dim) -> "Polyhedron":
        I = np.eye(dim)
        return cls(dim, np.zeros((0, dim)), [], np.zeros((1, dim)), np.vstack([I, -I]))

    @classmethod
    def point(cls, p) -> "Polyhedron":
        p = np.asarray(p, float)
        return cls.from_v([p])

    @classmethod
    def orthant(cls, dim) -> "Polyhedron":
        return cls.from_h(np.eye(dim), np.zeros(dim))

    @classmethod
    def cone(cls, rays, dim=None) -> "Polyhedron":
        rays = np.asarray(rays, float)
        dim = dim or rays.shape[1]
        return cls.from_v(np.zeros((1, dim)), rays)

    @classmethod
    def subspace(cls, basis, dim=None) -> "Polyhedron":
        """Linear span of the given row vectors."""
        B = np.asarray(basis, float)
        if dim is None:
            dim = B.shape[1]
        B = B.reshape(-1, dim)
        return cls.from_v(np.zeros((1, dim)), np.vstack([B, -B]) if len(B) else None, dim=dim)

    # queries --------------------------------------------------------------
    @property
    def is_empty(self) -> bool:
        return len(self.vertices) == 0

    @property
    def is_bounded(self) -> bool:
        return not self.is_empty and len(self.rays) == 0

    def contains(self, x, tol=TOL_GEO) -> bool:
        if self.is_empty:
            return False
        x = np.asarray(x, float)
        if len(self.A) == 0:
            return True
        return bool(np.all(self.A.astype(float) @ x >= self.b.astype(float) - tol))

    def is_cone(self, tol=TOL_GEO) -> bool:
        if self.is_empty:
            return False
        return bool(np.all(np.abs(self.b.astype(float)) <= tol))

    def equalities(self, tol=TOL_GEO):
        """Rows (a, b) that appear together with their negation."""
        A, b = self.A.astype(float), self.b.astype(float)
        out = []
        for i in range(len(A)):
            for j in range(i + 1, len(A)):
                if np.allclose(A[i], -A[j], atol=tol) and abs(b[i] + b[j]) <= tol:
                    out.append((A[i], b[i]))
        return out

    def to_float(self) -> "Polyhedron":
        if not self.exact:
            return self
        return Polyhedron(self.dim, self.A.astype(float), self.b.astype(float),
                          self.vertices.astype(float), self.rays.astype(float))

    def translate(self, v) -> "Polyhedron":
        if self.is_empty:
            return self
        v = np.asarray(v, dtype=object if self.exact else float)
        if self.exact:
            v = _to_exact(v)
        return Polyhedron(self.dim, self.A, self.b + self.A.dot(v), self.vertices + v,
                          self.rays, self.exact)

    def scale(self, s) -> "Polyhedron":
        """s * P for a scalar s > 0."""
        if s <= 0:
            raise ValueError("scale factor must be positive")
        if self.is_empty:
            return self
        return Polyhedron(self.dim, self.A, self.b * s, self.vertices * s, self.rays,
                          self.exact)

    def __neg__(self) -> "Polyhedron":
        if self.is_empty:
            return self
        return Polyhedron(self.dim, -self.A, self.b, -self.vertices, -self.rays, self.exact)

    def __add__(self, other):
        if isinstance(other, Polyhedron):
            return minkowski_sum(self, other)
        return self.translate(other)

    def __and__(self, other):
        return intersect(self, other)

    def __repr__(self):
        if self.is_empty:
            return f"Polyhedron(dim={self.dim}, empty)"
        return (f"Polyhedron(dim={self.dim}, facets={len(self.A)}, "
                f"vertices={len(self.vertices)}, rays={len(self.rays)})")

    # serialization --------------------------------------------------------
    def to_dict(self) -> dict:
        f = self.to_float()
        return {
            "dim": self.dim,
            "empty": bool(self.is_empty),
            "H": [{"a": [float(v) for v in a], "b": float(bb)} for a, bb in zip(f.A, f.b)],
            "V": {"vertices": [[float(v) for v in p] for p in f.vertices],
                  "rays": [[float(v) for v in r] for r in f.rays]},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Polyhedron":
        dim = int(data["dim"])
        if "H" in data:
            H = data["H"]
            A = np.array([h["a"] for h in H], float).reshape(-1, dim)
            b = np.array([h["b"] for h in H], float)
            return cls.from_h(A, b, dim=dim)
        if "V" in data:
            V = data["V"]
            return cls.from_v(np.array(V.get("vertices", []), float).reshape(-1, dim),
                              np.array(V.get("rays", []), float).reshape(-1, dim), dim=dim)
        raise PolytopeError("polyhedron needs an H or V block")


class Halfspace:
    """{x : a.x >= b} with a nonzero normal."""

    def __init__(self, a, b):
        self.a = np.asarray(a, float).reshape(-1)
        if not np.any(self.a):
            raise PolytopeError("halfspace normal must be nonzero")
        self.b = float(b)

    @property
    def dim(self) -> int:
        return len(self.a)

    def contains(self, x, tol=TOL_GEO) -> bool:
        return bool(self.a @ np.asarray(x, float) >= self.b - tol)

    def to_polyhedron(self) -> Polyhedron:
        return Polyhedron.from_h(self.a.reshape(1, -1), [self.b])

    def __repr__(self):
        return f"Halfspace(a={self.a.tolist()}, b={self.b})"


def _check_dims(P, Q):
    if P.dim != Q.dim:
        raise DimMismatch(f"dimensions differ: {P.dim} vs {Q.dim}")


def to_vrep(P: Polyhedron) -> Polyhedron:
    """Both representations from the H-part of P."""
    return Polyhedron.from_h(P.A, P.b, dim=P.dim, exact=P.exact)


def to_hrep(P: Polyhedron) -> Polyhedron:
    """Both representations from the V-part of P."""
    if P.is_empty:
        return Polyhedron.empty(P.dim, P.exact)
    return Polyhedron.from_v(P.vertices, P.rays, dim=P.dim, exact=P.exact)


def minkowski_sum(P: Polyhedron, Q: Polyhedron) -> Polyhedron:
    _check_dims(P, Q)
    exact = P.exact or Q.exact
    if P.is_empty or Q.is_empty:
        return Polyhedron.empty(P.dim, exact)
    V = (P.vertices[:, None, :] + Q.vertices[None, :, :]).reshape(-1, P.dim)
    R = np.vstack([P.rays, Q.rays])
    return Polyhedron.from_v(V, R, dim=P.dim, exact=exact)


def intersect(P: Polyhedron, Q: Polyhedron) -> Polyhedron:
    _check_dims(P, Q)
    exact = P.exact or Q.exact
    if P.is_empty or Q.is_empty:
        return Polyhedron.empty(P.dim, exact)
    return Polyhedron.from_h(np.vstack([P.A, Q.A]), np.concatenate([P.b, Q.b]),
                             dim=P.dim, exact=exact)


def _inf_v(P: Polyhedron, c, tol=TOL_GEO):
    """inf of c.x over P from the V-representation."""
    if len(P.rays):
        cr = P.rays.dot(c)
        if P.exact:
            if any(v < 0 for v in cr):
                return -np.inf
        elif np.any(cr < -tol):
            return -np.inf
    return min(P.vertices.dot(c))


def geometric_difference(A: Polyhedron, B: Polyhedron) -> Polyhedron:
    """{u : u + B is contained in A}."""
    _check_dims(A, B)
    if B.is_empty:
        raise EmptySubtrahend("geometric difference with an empty set")
    exact = A.exact or B.exact
    if A.is_empty:
        return Polyhedron.empty(A.dim, exact)
    b = []
    for a, bb in zip(A.A, A.b):
        m = _inf_v(B, a)
        if m == -np.inf:
            return Polyhedron.empty(A.dim, exact)
        b.append(bb - m)
    return Polyhedron.from_h(A.A, np.array(b, dtype=object if exact else float),
                             dim=A.dim, exact=exact)


def support(P: Polyhedron, c, method: str = "lp") -> float:
    """inf_{x in P} c.x, or -inf when unbounded below."""
    c = np.asarray(c, dtype=object if P.exact else float)
    if P.is_empty:
        raise EmptyPolyhedron("support of an empty polyhedron")
    if method == "v" or P.exact:
        return _inf_v(P, c)
    if len(P.A) == 0:
        return 0.0 if np.allclose(c, 0) else -np.inf
    res = _lp(np.asarray(c, float), A_ub=-P.A.astype(float), b_ub=-P.b.astype(float))
    if res.status == 3:
        return -np.inf
    if res.status == 2:
        raise EmptyPolyhedron("LP reports infeasibility")
    if res.status != 0:
        raise NumericalFailure(res.message)
    return float(res.fun)


def subset(P: Polyhedron, Q: Polyhedron, tol: float = TOL_GEO, method: str = "v") -> bool:
    """True iff P is contained in Q (within tol on Q's normalized halfspaces)."""
    _check_dims(P, Q)
    if P.is_empty:
        return True
    if Q.is_empty:
        return False
    for a, b in zip(Q.A, Q.b):
        if support(P, a, method=method) < float(b) - tol:
            return False
    return True


def subset_witness(P: Polyhedron, Q: Polyhedron, tol: float = TOL_GEO):
    """A generator of P violating Q (point or ray), or None."""
    if P.is_empty:
        return None
    if Q.is_empty:
        return {"point": P.vertices[0].astype(float).tolist()}
    Af, bf = Q.A.astype(float), Q.b.astype(float)
    for v in P.vertices.astype(float):
        if np.any(Af @ v < bf - tol):
            return {"point": v.tolist()}
    for r in P.rays.astype(float):
        if np.any(Af @ r < -tol):
            return {"ray": r.tolist()}
    return None


def equal(P: Polyhedron, Q: Polyhedron, tol: float = TOL_GEO) -> bool:
    return subset(P, Q, tol) and subset(Q, P, tol)


def linear_image(P: Polyhedron, M, shift=None) -> Polyhedron:
    """{M x + shift : x in P} for a matrix M of shape (k, dim)."""
    M = np.asarray(M, float)
    k = M.shape[0]
    if P.is_empty:
        return Polyhedron.empty(k)
    V = P.vertices.astype(float) @ M.T
    if shift is not None:
        V = V + np.asarray(shift, float)
    R = P.rays.astype(float) @ M.T if len(P.rays) else np.zeros((0, k))
    return Polyhedron.from_v(V, R, dim=k)


# ---------------------------------------------------------------------------
# LP helper and lifted polyhedra
# ---------------------------------------------------------------------------

def _lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, bounds=None):
    n = len(c)
    if bounds is None:
        bounds = [(None, None)] * n
    kw = {}
    if A_ub is not None and len(A_ub):
        kw["A_ub"], kw["b_ub"] = A_ub, b_ub
    if A_eq is not None and len(A_eq):
        kw["A_eq"], kw["b_eq"] = A_eq, b_eq
    res = linprog(c, bounds=bounds, method="highs-ds", **kw)
    if res.status == 4:
        # ambiguous simplex outcome; retry without presolve, then with IPM
        res = linprog(c, bounds=bounds, method="highs-ds",
                      options={"presolve": False}, **kw)
    if res.status == 4:
        res = linprog(c, bounds=bounds, method="highs-ipm", **kw)
    return res


class Lifted:
    """{x in R^n : exists y in R^k, Ax x + Ay y >= b, Ex x + Ey y = e}."""

    def __init__(self, n, k=0, Ax=None, Ay=None, b=None, Ex=None, Ey=None, e=None):
        self.n, self.k = int(n), int(k)
        z = lambda r, c: np.zeros((r, c))
        self.Ax = z(0, n) if Ax is None else np.asarray(Ax, float).reshape(-1, n)
        m = len(self.Ax)
        self.Ay = z(m, k) if Ay is None else np.asarray(Ay, float).reshape(m, k)
        self.b = np.zeros(0) if b is None else np.asarray(b, float).reshape(m)
        self.Ex = z(0, n) if Ex is None else np.asarray(Ex, float).reshape(-1, n)
        me = len(self.Ex)
        self.Ey = z(me, k) if Ey is None else np.asarray(Ey, float).reshape(me, k)
        self.e = np.zeros(0) if e is None else np.asarray(e, float).reshape(me)

    @classmethod
    def from_polyhedron(cls, P: Polyhedron) -> "Lifted":
        return cls(P.dim, 0, P.A.astype(float), None, P.b.astype(float))

    @classmethod
    def whole(cls, n) -> "Lifted":
        return cls(n)

    @classmethod
    def empty(cls, n) -> "Lifted":
        return cls(n, 0, np.zeros((1, n)), None, [1.0])

    # LP plumbing ----------------------------------------------------------
    def _solve(self, cx, cy=None, box=None):
        cy = np.zeros(self.k) if cy is None else cy
        c = np.concatenate([cx, cy])
        A_ub = -np.hstack([self.Ax, self.Ay])
        b_ub = -self.b
        A_eq = np.hstack([self.Ex, self.Ey])
        bounds = None
        if box is not None:
            lo, hi = box
            bounds = [(lo[i], hi[i]) for i in range(self.n)] + [(None, None)] * self.k
        return _lp(c, A_ub, b_ub, A_eq, self.e, bounds)

    def minimize(self, c, box=None):
        """(value, x) minimizing c.x; value -inf when unbounded."""
        res = self._solve(np.asarray(c, float), box=box)
        if res.status == 2:
            raise EmptyPolyhedron("lifted set is empty")
        if res.status == 3:
            return -np.inf, None
        if res.status != 0:
            raise NumericalFailure(res.message)
        return float(res.fun), res.x[:self.n]

    def support(self, c) -> float:
        return self.minimize(c)[0]

    def is_empty(self) -> bool:
        res = self._solve(np.zeros(self.n))
        if res.status == 2:
            return True
        if res.status in (0, 3):
            return False
        raise NumericalFailure(res.message)

    def feasible_point(self):
        res = self._solve(np.zeros(self.n))
        if res.status != 0:
            return None
        return res.x[:self.n]

    def contains(self, x, tol=TOL_GEO) -> bool:
        """Membership allowing a slack of tol on every row."""
        x = np.asarray(x, float)
        k = self.k
        m, me = len(self.b), len(self.e)
        # variables (y, s); minimize s subject to slackened rows
        c = np.zeros(k + 1)
        c[-1] = 1.0
        A_ub = np.zeros((m + 2 * me, k + 1))
        b_ub = np.zeros(m + 2 * me)
        A_ub[:m, :k] = -self.Ay
        A_ub[:m, k] = -1.0
        b_ub[:m] = self.Ax @ x - self.b
        A_ub[m:m + me, :k] = self.Ey
        A_ub[m:m + me, k] = -1.0
        b_ub[m:m + me] = self.e - self.Ex @ x
        A_ub[m + me:, :k] = -self.Ey
        A_ub[m + me:, k] = -1.0
        b_ub[m + me:] = self.Ex @ x - self.e
        bounds = [(None, None)] * k + [(0, None)]
        res = _lp(c, A_ub, b_ub, None, None, bounds)
        if res.status != 0:
            raise NumericalFailure(res.message)
        return res.fun <= tol

    def recedes(self, r, tol=1e-9) -> bool:
        """True when r is a recession direction of the projected set."""
        r = np.asarray(r, float)
        _, gap = self._separate(r / max(np.linalg.norm(r), 1e-300), homogeneous=True)
        return gap <= tol

    # set algebra ---------------------------------------------------------
    def intersect(self, other: "Lifted") -> "Lifted":
        if other.n != self.n:
            raise DimMismatch("dimension mismatch")
        k1, k2 = self.k, other.k
        Ay = np.block([[self.Ay, np.zeros((len(self.b), k2))],
                       [np.zeros((len(other.b), k1)), other.Ay]])
        Ey = np.block([[self.Ey, np.zeros((len(self.e), k2))],
                       [np.zeros((len(other.e), k1)), other.Ey]])
        return Lifted(self.n, k1 + k2, np.vstack([self.Ax, other.Ax]), Ay,
                      np.concatenate([self.b, other.b]), np.vstack([self.Ex, other.Ex]),
                      Ey, np.concatenate([self.e, other.e]))

    def minkowski_sum(self, other: "Lifted") -> "Lifted":
        """x = x1 + x2 with auxiliary variables (x1, y1, y2)."""
        if other.n != self.n:
            raise DimMismatch("dimension mismatch")
        n, k1, k2 = self.n, self.k, other.k
        m1, m2 = len(self.b), len(other.b)
        q1, q2 = len(self.e), len(other.e)
        K = n + k1 + k2
        Ax = np.vstack([np.zeros((m1, n)), other.Ax])
        Ay = np.zeros((m1 + m2, K))
        Ay[:m1, :n] = self.Ax
        Ay[:m1, n:n + k1] = self.Ay
        Ay[m1:, :n] = -other.Ax
        Ay[m1:, n + k1:] = other.Ay
        Ex = np.vstack([np.zeros((q1, n)), other.Ex])
        Ey = np.zeros((q1 + q2, K))
        Ey[:q1, :n] = self.Ex
        Ey[:q1, n:n + k1] = self.Ey
        Ey[q1:, :n] = -other.Ex
        Ey[q1:, n + k1:] = other.Ey
        return Lifted(n, K, Ax, Ay, np.concatenate([self.b, other.b]), Ex, Ey,
                      np.concatenate([self.e, other.e]))

    def preimage(self, M, c0=None) -> "Lifted":
        """{z : M z + c0 in self} for M of shape (n, n')."""
        M = np.asarray(M, float)
        c0 = np.zeros(self.n) if c0 is None else np.asarray(c0, float)
        return Lifted(M.shape[1], self.k, self.Ax @ M, self.Ay, self.b - self.Ax @ c0,
                      self.Ex @ M, self.Ey, self.e - self.Ex @ c0)

    def with_equalities(self, E, e=None) -> "Lifted":
        """Intersection with the affine space {x : E x = e}."""
        E = np.asarray(E, float).reshape(-1, self.n)
        e = np.zeros(len(E)) if e is None else np.asarray(e, float)
        return Lifted(self.n, self.k, self.Ax, self.Ay, self.b,
                      np.vstack([self.Ex, E]),
                      np.vstack([self.Ey, np.zeros((len(E), self.k))]),
                      np.concatenate([self.e, e]))

    def scale(self, s: float) -> "Lifted":
        """s * set for s > 0 (auxiliary variables rescale with x)."""
        return Lifted(self.n, self.k, self.Ax, self.Ay, self.b * s, self.Ex, self.Ey,
                      self.e * s)

    @staticmethod
    def product(parts, positions, n) -> "Lifted":
        """Cartesian product; part i acts on coordinates positions[i] of R^n."""
        K = sum(p.k for p in parts)
        m = sum(len(p.b) for p in parts)
        me = sum(len(p.e) for p in parts)
        Ax, Ay, b = np.zeros((m, n)), np.zeros((m, K)), np.zeros(m)
        Ex, Ey, e = np.zeros((me, n)), np.zeros((me, K)), np.zeros(me)
        r = re_ = k = 0
        for p, pos in zip(parts, positions):
            pos = np.asarray(pos, int)
            mi, mei = len(p.b), len(p.e)
            Ax[r:r + mi][:, pos] = p.Ax
            Ay[r:r + mi, k:k + p.k] = p.Ay
            b[r:r + mi] = p.b
            Ex[re_:re_ + mei][:, pos] = p.Ex
            Ey[re_:re_ + mei, k:k + p.k] = p.Ey
            e[re_:re_ + mei] = p.e
            r += mi
            re_ += mei
            k += p.k
        return Lifted(n, K, Ax, Ay, b, Ex, Ey, e)

    def eliminate(self, keep) -> "Lifted":
        """Projection onto the coordinates ``keep`` (others become auxiliary)."""
        keep = np.asarray(keep, int)
        drop = np.setdiff1d(np.arange(self.n), keep)
        return Lifted(len(keep), self.k + len(drop), self.Ax[:, keep],
                      np.hstack([self.Ax[:, drop], self.Ay]), self.b,
                      self.Ex[:, keep], np.hstack([self.Ex[:, drop], self.Ey]), self.e)

    # projection ---------------------------------------------------------------
    def _separate(self, v, homogeneous=False):
        """Normal a (|a|_inf <= 1) maximizing the violation of v by a valid cut.

        Returns (a, gap) with gap = lower bound of the cut minus a.v (positive
        when v is separated); for homogeneous=True v is treated as a direction.
        """
        m, me, n = len(self.b), len(self.e), self.n
        if m + me == 0:
            return np.zeros(n), -np.inf          # no rows: nothing can be separated
        # variables lam (m, >= 0), mu (me, free)
        c = np.concatenate([self.Ax @ v - (0 if homogeneous else self.b),
                            self.Ex @ v - (0 if homogeneous else self.e)])
        G = np.hstack([self.Ax.T, self.Ex.T])         # a = G [lam; mu]
        Aeq = np.hstack([self.Ay.T, self.Ey.T])
        A_ub = np.vstack([G, -G])
        b_ub = np.ones(2 * n)
        bounds = [(0, None)] * m + [(None, None)] * me
        res = _lp(c, A_ub, b_ub, Aeq if self.k else None, np.zeros(self.k), bounds)
        if res.status != 0:
            raise NumericalFailure(f"separation LP failed: {res.message}")
        lam = res.x
        return G @ lam, -float(res.fun)

    def affine_hull(self, x0, tol=1e-7):
        """Orthonormal basis of the direction space of the affine hull."""
        n = self.n
        basis = np.zeros((n, 0))
        lo, hi = x0 - 1.0, x0 + 1.0
        while True:
            if basis.shape[1] == n:
                return basis
            comp = _complement(basis, n)
            grew = False
            for j in range(comp.shape[1]):
                d = comp[:, j]
                for sgn in (1.0, -1.0):
                    val, x = self.minimize(sgn * d, box=(lo, hi))
                    if sgn * d @ x0 - val > tol:
                        step = x - x0
                        step = step - basis @ (basis.T @ step)
                        basis = np.column_stack([basis, step / np.linalg.norm(step)])
                        grew = True
                        break
                if grew:
                    break
            if not grew:
                return basis

    def to_polyhedron(self, tol: float = 1e-9, max_rounds: int = 500) -> Polyhedron:
        """Exact H/V description of the projection by outer approximation."""
        x0 = self.feasible_point()
        if x0 is None:
            if self.is_empty():
                return Polyhedron.empty(self.n)
            raise NumericalFailure("could not find a feasible point")
        B = self.affine_hull(x0)
        k = B.shape[1]
        if k == 0:
            return Polyhedron.from_v(x0.reshape(1, -1))
        par = self.preimage(B, x0)
        cuts_A, cuts_b = [], []
        outer = Polyhedron.whole(k)
        for _ in range(max_rounds):
            new = []
            for r in outer.rays:
                a, gap = par._separate(r, homogeneous=True)
                if gap > tol:
                    new.append(a)
            for v in outer.vertices:
                a, gap = par._separate(v)
                if gap > tol * max(1.0, np.abs(v).max()):
                    new.append(a)
            added = 0
            for a in new:
                nrm = np.linalg.norm(a)
                if nrm < 1e-12:
                    continue
                a = a / nrm
                beta = par.support(a)
                if beta == -np.inf:
                    raise NumericalFailure("cut normal is not bounded below")
                if any(np.allclose(a, ca, atol=1e-9) and abs(beta - cb) < 1e-9
                       for ca, cb in zip(cuts_A, cuts_b)):
                    continue
                cuts_A.append(a)
                cuts_b.append(beta)
                added += 1
            if not added:
                break
            outer = Polyhedron.from_h(np.array(cuts_A), np.array(cuts_b), dim=k)
            # keep only the irredundant cuts to bound the DD size
            cuts_A, cuts_b = list(outer.A), list(outer.b)
        else:
            raise NumericalFailure("projection did not converge")
        # map back: x = x0 + B c
        N = _complement(B, self.n)
        A = outer.A @ B.T
        b = outer.b + A @ x0
        if N.shape[1]:
            A = np.vstack([A, N.T, -N.T])
            b = np.concatenate([b, N.T @ x0, -(N.T @ x0)])
        V = outer.vertices @ B.T + x0
        R = outer.rays @ B.T
        return Polyhedron(self.n, A, b, V, R)


def _complement(B, n):
    """Orthonormal basis of the orthogonal complement of span(B)."""
    if B.shape[1] == 0:
        return np.eye(n)
    q, _ = np.linalg.qr(np.column_stack([B, np.eye(n)]))
    return q[:, B.shape[1]:n]


def project(lifted: Lifted, tol: float = 1e-9) -> Polyhedron:
    return lifted.to_polyhedron(tol=tol)

"""risktool: command-line front end for the set-valued risk library.

Exit codes: 0 success or property holds, 1 parse/IO error, 2 property fails,
3 hypothesis violated, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import __version__
from .consistency import (HypothesisViolated, check_acceptance_decomposition,
                          check_market_compat_decomposition, check_normalization_of_composition,
                          check_recursion, check_time_consistency, compose_backward, tc_pairs)
from .dual import (DualPair, avar_pair_sampler, dirichlet_pairs, shp_facet_certificates,
                   shp_pair_sampler, verify_dual_representation)
from .market import ConicalMarket, MarketError, check_robust_no_arbitrage
from .polytope import NumericalFailure, Polyhedron, PolytopeError, intersect
from .riskmeasure import (AVaR, RandomSet, RiskError, Superhedging, UserAcceptance, WorstCase,
                          check_axioms, leafwise_acceptance, random_claims, shp)
from .tree import AdaptedVector, ScenarioTree, TreeError

log = logging.getLogger("risktool")

SCHEMA = 1
EXIT_OK, EXIT_IO, EXIT_FAILS, EXIT_HYP, EXIT_NUM = 0, 1, 2, 3, 4
DEFAULTS = {"seed": 42, "tol": 1e-9, "tol_geo": 1e-8, "bbox": [-5.0, 5.0, -5.0, 5.0],
            "n_claims": 10, "n_pairs": 200, "lam": None, "measure": "shp", "t": None,
            "eps": 1e-6}


class DimUnsupported(ValueError):
    pass


class InputError(ValueError):
    pass


# ---------------------------------------------------------------------------
# plot data
# ---------------------------------------------------------------------------

def _ccw(V: np.ndarray) -> list:
    """Counterclockwise cycle starting at the lowest, then leftmost, vertex."""
    if len(V) == 0:
        return []
    V = np.unique(np.round(V, 12), axis=0)
    if len(V) <= 2:
        return V.tolist()
    c = V.mean(axis=0)
    ang = np.arctan2(V[:, 1] - c[1], V[:, 0] - c[0])
    V = V[np.argsort(ang, kind="stable")]
    start = min(range(len(V)), key=lambda i: (V[i, 1], V[i, 0]))
    return np.roll(V, -start, axis=0).tolist()


def plot_polygon(P: Polyhedron, bbox) -> dict:
    """Vertex cycle of P clipped to the box [x0, x1] x [y0, y1]."""
    if P.dim != 2:
        raise DimUnsupported("plot data needs d = 2")
    x0, x1, y0, y1 = bbox
    box = Polyhedron.from_h(np.array([[1.0, 0], [-1, 0], [0, 1], [0, -1]]),
                            np.array([x0, -x1, y0, -y1]))
    clipped = not P.is_empty and not (P.is_bounded and all(box.contains(v) for v in
                                                           P.vertices.astype(float)))
    C = intersect(P.to_float(), box) if not P.is_empty else P
    verts = _ccw(C.vertices.astype(float)) if not C.is_empty else []
    return {"vertices": verts, "empty": len(verts) == 0, "clipped": bool(clipped)}


def emit_plot_data(sets, bbox=None) -> dict:
    """{t: {node: polygon}} for a list of RandomSets (or a single one)."""
    bbox = DEFAULTS["bbox"] if bbox is None else bbox
    if isinstance(sets, RandomSet):
        sets = [sets]
    out = {}
    for S in sets:
        if S.tree.d != 2:
            raise DimUnsupported("plot data needs d = 2")
        out[str(S.t)] = {n: plot_polygon(P, bbox) for n, P in S.items()}
    return {"schema": SCHEMA, "bbox": list(bbox), "polygons": out}


# ---------------------------------------------------------------------------
# input
# ---------------------------------------------------------------------------

def _read_json(path, exact=False):
    try:
        with open(path) as fh:
            if exact:
                return json.load(fh, parse_float=Fraction, parse_int=Fraction)
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from None


def load_tree(path) -> ScenarioTree:
    return ScenarioTree.from_dict(_read_json(path))


def load_market(tree, path, eligible_path=None) -> ConicalMarket:
    data = _read_json(path)
    if eligible_path:
        el = _read_json(eligible_path)
        data["eligible"] = el.get("eligible", el)
    return ConicalMarket.from_dict(tree, data)


def load_claim(tree, path, exact=False):
    data = _read_json(path, exact)
    if "X" not in data:
        raise InputError("claim file needs an 'X' entry")
    X = data["X"]
    missing = [h for h in tree.leaves if h not in X]
    if missing:
        raise InputError(f"claim file misses leaves {missing[:5]}")
    for h in tree.leaves:
        if len(X[h]) != tree.d:
            raise InputError(f"claim at {h!r} must have {tree.d} entries")
    claim = AdaptedVector(tree, tree.T, [[float(v) for v in X[h]] for h in tree.leaves])
    return claim, ({h: [Fraction(v) for v in X[h]] for h in tree.leaves} if exact else None)


def load_lambda(tree, args):
    lam = args.lam
    if lam is None:
        return None
    if isinstance(lam, (int, float)):
        return float(lam)
    try:
        return float(lam)
    except ValueError:
        data = _read_json(lam)
        return data.get("lambda", data)


def load_acceptance(market, path):
    """Acceptance file: {"per_leaf": {t: Polyhedron}} or {"sets": {t: Polyhedron}}."""
    data = _read_json(path)
    coherent = bool(data.get("coherent", False))
    if "per_leaf" in data:
        return leafwise_acceptance(
            market, {int(t): Polyhedron.from_dict(P) for t, P in data["per_leaf"].items()},
            coherent)
    if "sets" in data:
        return UserAcceptance(market, {int(t): Polyhedron.from_dict(P)
                                       for t, P in data["sets"].items()}, coherent)
    raise InputError("acceptance file needs 'per_leaf' or 'sets'")


def _exact_market(market: ConicalMarket, path) -> ConicalMarket:
    """Same market with cones rebuilt over the rationals from the file entries."""
    data = _read_json(path, exact=True)
    tree = market.tree
    d = tree.d
    cones = {}
    for nid in tree.nodes:
        spec = data.get("nodes", {}).get(nid, data.get("default"))
        if "bid_ask" in spec:
            Pi = [[Fraction(v) for v in row] for row in spec["bid_ask"]]
            gens = [[Fraction(int(i == k)) for k in range(d)] for i in range(d)]
            for i in range(d):
                for j in range(d):
                    if i != j:
                        g = [Fraction(0)] * d
                        g[i], g[j] = Pi[i][j], Fraction(-1)
                        gens.append(g)
            cones[nid] = Polyhedron.from_v(np.zeros((1, d), dtype=object) + Fraction(0),
                                           np.array(gens, dtype=object), dim=d, exact=True)
        elif "price" in spec:
            S = np.array([[Fraction(v) for v in spec["price"]]], dtype=object)
            cones[nid] = Polyhedron.from_h(S, np.array([Fraction(0)], dtype=object), dim=d,
                                           exact=True)
        else:
            K = market.cone(nid)
            cones[nid] = Polyhedron.from_h(K.A, K.b, dim=d, exact=True)
    return ConicalMarket(tree, cones, market.eligible, check=False)


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _tolist(obj):
    if isinstance(obj, dict):
        return {str(k): _tolist(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_tolist(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _tolist(obj.tolist())
    if isinstance(obj, (np.floating, Fraction)):
        return float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    if isinstance(obj, DualPair):
        return obj.to_dict()
    return obj


def write_atomic(path, payload: dict):
    text = json.dumps(_tolist(payload), indent=2, sort_keys=True) + "\n"
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _exact_dict(P: Polyhedron) -> dict:
    out = P.to_dict()
    out["exact"] = {"H": [{"a": [str(v) for v in a], "b": str(b)} for a, b in zip(P.A, P.b)],
                    "V": {"vertices": [[str(v) for v in p] for p in P.vertices],
                          "rays": [[str(v) for v in r] for r in P.rays]}}
    return out


def _sets_payload(sets: list, exact=False) -> list:
    out = []
    for S in sets:
        for n, P in S.items():
            out.append({"t": S.t, "node": n,
                        "polyhedron": _exact_dict(P) if exact and P.exact else P.to_dict()})
    return out


def _emit(args, payload: dict, sets=None):
    payload = {"schema": SCHEMA, "version": __version__, **payload}
    if args.out:
        write_atomic(os.path.join(args.out, "result.json"), payload)
        if sets is not None and sets and sets[0].tree.d == 2:
            write_atomic(os.path.join(args.out, "plot.json"), emit_plot_data(sets, args.bbox))
    else:
        sys.stdout.write(json.dumps(_tolist(payload), indent=2, sort_keys=True) + "\n")


def _common_meta(args, measure_name, params=None):
    return {"command": args.command, "measure": measure_name, "parameters": params or {},
            "tolerances": {"tol": args.tol, "tol_geo": args.tol_geo}, "seed": args.seed}


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _bundle(args, need_claim=True):
    tree = load_tree(args.tree)
    market = load_market(tree, args.market, args.eligible)
    claim = exact_vals = None
    if need_claim:
        if not args.claim:
            raise InputError("--claim is required")
        claim, exact_vals = load_claim(tree, args.claim, args.exact)
    return tree, market, claim, exact_vals


def _times(tree, args):
    return list(range(tree.T + 1)) if args.t is None else [int(args.t)]


def _build_measure(args, market):
    name = args.measure
    if name == "shp":
        M = Superhedging(market)
    elif name == "avar":
        M = AVaR(market, load_lambda(market.tree, args), args.market_compatible)
    elif name == "worst-case":
        M = WorstCase(market)
    elif name == "user":
        if not args.acceptance:
            raise InputError("--acceptance is required for the user measure")
        M = load_acceptance(market, args.acceptance)
    else:
        raise InputError(f"unknown measure {name!r}")
    if getattr(args, "composed", False):
        M = compose_backward(M)
    return M


def _warn_exact(args):
    if args.exact and args.command not in ("shp", "worst-case"):
        log.warning("--exact is only supported by shp and worst-case; using floats")


def cmd_shp(args):
    tree, market, X, ex = _bundle(args)
    if args.exact:
        emarket = _exact_market(market, args.market)
        sets = shp(X, emarket, exact_values=ex)
    else:
        sets = shp(X, market)
    sets = [S for S in sets if S is not None and S.t in _times(tree, args)]
    meta = _common_meta(args, "shp", {"exact": args.exact})
    meta["empty_intersection"] = {S.t: S.meta["empty_intersection"] for S in sets
                                  if "empty_intersection" in S.meta}
    _emit(args, {**meta, "sets": _sets_payload(sets, args.exact)}, sets)
    return EXIT_OK


def _evaluate_cmd(args, M, params):
    tree, market = M.tree, M.market
    X = args._claim
    sets = [M.evaluate(X, t) for t in _times(tree, args)]
    meta = _common_meta(args, M.name, params)
    _emit(args, {**meta, "sets": _sets_payload(sets)}, sets)
    return EXIT_OK


def cmd_avar(args):
    _warn_exact(args)
    tree, market, X, _ = _bundle(args)
    args._claim = X
    lam = load_lambda(tree, args)
    M = AVaR(market, lam, args.market_compatible)
    return _evaluate_cmd(args, M, {"lambda": {n: v for n, v in M.lam.items()},
                                   "market_compatible": args.market_compatible})


def cmd_worst_case(args):
    tree, market, X, ex = _bundle(args)
    if args.exact:
        sets = []
        for t in _times(tree, args):
            nodes = {}
            for g in tree.layer(t):
                lo = [max(-ex[tree.leaves[j]][i] for j in tree.leaves_under(g))
                      for i in range(tree.d)]
                eye = np.array([[Fraction(int(i == k)) for k in range(tree.d)]
                                for i in range(tree.d)], dtype=object)
                P = Polyhedron.from_h(eye, np.array(lo, dtype=object), exact=True)
                if not market.is_full(t):
                    P = intersect(P, market.eligible_subspace(t))
                nodes[g] = P
            sets.append(RandomSet(tree, t, nodes, {"measure": "worst-case"}))
        meta = _common_meta(args, "worst-case", {"exact": True})
        _emit(args, {**meta, "sets": _sets_payload(sets, True)}, sets)
        return EXIT_OK
    args._claim = X
    return _evaluate_cmd(args, WorstCase(market), {})


def cmd_risk(args):
    _warn_exact(args)
    tree, market, X, _ = _bundle(args)
    args._claim = X
    if not args.acceptance:
        raise InputError("--acceptance is required")
    return _evaluate_cmd(args, load_acceptance(market, args.acceptance), {})


def _claim_family(args, tree, market, X=None):
    claims = [X] if X is not None else []
    claims += random_claims(tree, args.n_claims, args.seed, market=market)
    return claims


def cmd_check(args):
    _warn_exact(args)
    tree, market, X, _ = _bundle(args, need_claim=bool(args.claim))
    M = _build_measure(args, market)
    claims = _claim_family(args, tree, market, X)
    prop = args.property
    meta = _common_meta(args, M.name, {"property": prop})
    if prop == "axioms":
        reports = {t: check_axioms(M, claims, t, tol=args.tol_geo, seed=args.seed)
                   for t in _times(tree, args)}
        fails = any(r["verdict"] == "fails" for rep in reports.values() for r in rep.values())
        _emit(args, {**meta, "verdict": "fails" if fails else "holds", "axioms": reports})
        return EXIT_FAILS if fails else EXIT_OK
    if prop == "tc":
        rep = check_time_consistency(M, tc_pairs(tree, max(args.n_claims, 100), args.seed,
                                                 market), args.t, tol=args.tol_geo)
    elif prop == "mptc":
        rep = check_acceptance_decomposition(M, args.t)
        rep.property = "mptc"
    elif prop == "recursion":
        rep = check_recursion(M, claims, args.t, seed=args.seed)
    elif prop == "market-compat":
        rep = check_market_compat_decomposition(M, claims, args.t, seed=args.seed)
    else:
        raise InputError(f"unknown property {prop!r}")
    _emit(args, {**meta, **rep.to_dict()})
    return EXIT_OK if rep.verdict in ("holds", "not-applicable") else EXIT_FAILS


def cmd_compose(args):
    _warn_exact(args)
    tree, market, X, _ = _bundle(args, need_claim=bool(args.claim))
    args.composed = False
    base = _build_measure(args, market)
    C = compose_backward(base)
    claims = _claim_family(args, tree, market, X)
    norm = check_normalization_of_composition(C, claims[:3])
    payload = {**_common_meta(args, C.name), "normalization": norm.to_dict(),
               "finite_at_zero": {t: C.finite_at_zero(t) for t in range(tree.T + 1)}}
    sets = None
    if X is not None:
        sets = [C.evaluate(X, t) for t in _times(tree, args)]
        payload["sets"] = _sets_payload(sets)
    _emit(args, payload, sets)
    return EXIT_OK if norm.verdict == "holds" else EXIT_FAILS


def cmd_dual_verify(args):
    _warn_exact(args)
    tree, market, X, _ = _bundle(args, need_claim=bool(args.claim))
    M = _build_measure(args, market)
    claims = _claim_family(args, tree, market, X)
    t = 0 if args.t is None else int(args.t)
    if args.pairs:
        data = _read_json(args.pairs)
        items = data if isinstance(data, list) else [data]
        pairs = [DualPair.from_dict(tree, p, t) for p in items]
    elif isinstance(M, Superhedging):
        pairs = shp_pair_sampler(market, claims[:2], t, args.n_pairs, args.seed)
    elif isinstance(M, AVaR):
        pairs = avar_pair_sampler(M, t, args.n_pairs, args.seed)
    else:
        pairs = dirichlet_pairs(tree, args.n_pairs, t, np.random.default_rng(args.seed),
                                market=market)
    rep = verify_dual_representation(M, claims, pairs, t, tol=args.tol_dual)
    payload = {**_common_meta(args, M.name), "report": rep}
    if isinstance(M, Superhedging):
        certs = [c for Xc in claims[:1] for c in shp_facet_certificates(market, Xc, t)]
        for c in certs:
            c.pop("pair", None)
        payload["certificates"] = certs
        if not all(c["certified"] for c in certs):
            rep["verdict"] = "fails"
    _emit(args, payload)
    return EXIT_OK if rep["verdict"] == "holds" else EXIT_FAILS


def cmd_na_r(args):
    tree, market, _, _ = _bundle(args, need_claim=False)
    cert = check_robust_no_arbitrage(market, args.eps)
    _emit(args, {**_common_meta(args, None, {"eps": args.eps}), "certificate": cert.to_dict()})
    return EXIT_OK if cert.ok else EXIT_FAILS


COMMANDS = {"shp": cmd_shp, "avar": cmd_avar, "worst-case": cmd_worst_case, "risk": cmd_risk,
            "check": cmd_check, "compose": cmd_compose, "dual-verify": cmd_dual_verify,
            "na-r": cmd_na_r}


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _bbox(text):
    vals = [float(v) for v in str(text).replace(",", " ").split()]
    if len(vals) != 4 or vals[0] >= vals[1] or vals[2] >= vals[3]:
        raise argparse.ArgumentTypeError("bbox needs x0 x1 y0 y1 with x0 < x1, y0 < y1")
    return vals


def _positive(text):
    v = float(text)
    if v <= 0:
        raise argparse.ArgumentTypeError("tolerances must be positive")
    return v


class _Parser(argparse.ArgumentParser):
    """Parse errors map to the IO exit code instead of argparse's 2."""

    def error(self, message):
        raise InputError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    S = argparse.SUPPRESS
    common.add_argument("--tree", default=S, help="tree description JSON")
    common.add_argument("--market", default=S, help="market JSON")
    common.add_argument("--claim", default=S, help="claim JSON {'X': {leaf: [..]}}")
    common.add_argument("--lambda", dest="lam", default=S,
                        help="AV@R level: a number or a JSON file {'lambda': {node: [..]}}")
    common.add_argument("--eligible", default=S, help="JSON {t: basis} overriding the market")
    common.add_argument("--acceptance", default=S, help="user acceptance-set JSON")
    common.add_argument("--measure", default=S,
                        choices=["shp", "avar", "worst-case", "user"])
    common.add_argument("--market-compatible", action="store_true", default=S)
    common.add_argument("--composed", action="store_true", default=S,
                        help="check the backward composition of the measure")
    common.add_argument("--t", type=int, default=S, help="single time (default: all)")
    common.add_argument("--tol", type=_positive, default=S)
    common.add_argument("--tol-geo", type=_positive, default=S)
    common.add_argument("--tol-dual", type=_positive, default=S)
    common.add_argument("--eps", type=_positive, default=S, help="NA^r margin")
    common.add_argument("--seed", type=int, default=S)
    common.add_argument("--n-claims", type=int, default=S)
    common.add_argument("--n-pairs", type=int, default=S)
    common.add_argument("--pairs", default=S, help="pair JSON (object or list)")
    common.add_argument("--out", default=S, help="output directory (default: stdout)")
    common.add_argument("--bbox", type=_bbox, default=S, help="plot box 'x0,x1,y0,y1'")
    common.add_argument("--exact", action="store_true", default=S, help="rational arithmetic")
    common.add_argument("--config", default=S, help="JSON file with option defaults")
    common.add_argument("-v", "--verbose", action="store_true", default=S)

    p = _Parser(prog="risktool", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in ("shp", "avar", "worst-case", "risk", "compose", "dual-verify", "na-r"):
        sub.add_parser(name, parents=[common])
    chk = sub.add_parser("check", parents=[common])
    chk.add_argument("property", choices=["axioms", "tc", "mptc", "recursion", "market-compat"])
    return p


FULL_DEFAULTS = {**DEFAULTS, "tree": None, "market": None, "claim": None, "eligible": None,
                 "acceptance": None, "market_compatible": False, "composed": False,
                 "tol_dual": 1e-7, "pairs": None, "out": None, "exact": False,
                 "config": None, "verbose": False}


def resolve_args(argv=None) -> argparse.Namespace:
    """Flags override the config file, which overrides the defaults."""
    ns = build_parser().parse_args(argv)
    given = vars(ns)
    config = {}
    if given.get("config"):
        raw = _read_json(given["config"])
        config = {k.replace("-", "_"): v for k, v in raw.items()}
        if "lambda" in config:
            config["lam"] = config.pop("lambda")
        unknown = set(config) - set(FULL_DEFAULTS)
        if unknown:
            raise InputError(f"unknown config keys {sorted(unknown)}")
        if "bbox" in config and not isinstance(config["bbox"], list):
            config["bbox"] = _bbox(config["bbox"])
    merged = {**FULL_DEFAULTS, **config, **given}
    if merged["tree"] is None or merged["market"] is None:
        raise InputError("--tree and --market are required")
    for key in ("tol", "tol_geo", "tol_dual", "eps"):
        if float(merged[key]) <= 0:
            raise InputError(f"{key} must be positive")
    return argparse.Namespace(**merged)


@dataclass
class ProblemBundle:
    """Input files and options of one command run."""

    tree: str
    market: str
    claim: str | None = None
    measure: str = "shp"
    params: dict = field(default_factory=dict)
    tol: float = 1e-9
    tol_geo: float = 1e-8
    seed: int = 42
    out: str | None = None

    def validate(self):
        for path in (self.tree, self.market, self.claim):
            if path is not None and not os.path.isfile(path):
                raise InputError(f"missing file {path}")
        if self.tol <= 0 or self.tol_geo <= 0:
            raise InputError("tolerances must be positive")

    def argv(self, command: str) -> list:
        words = command.split()
        out = words + ["--tree", self.tree, "--market", self.market, "--measure", self.measure,
                       "--tol", repr(self.tol), "--tol-geo", repr(self.tol_geo),
                       "--seed", str(self.seed)]
        if self.claim:
            out += ["--claim", self.claim]
        if self.out:
            out += ["--out", self.out]
        for key, val in self.params.items():
            flag = "--" + key.replace("_", "-")
            if val is True:
                out.append(flag)
            elif val not in (None, False):
                out += [flag, str(val)]
        return out


def run(command: str, bundle: ProblemBundle) -> int:
    """Run one command (e.g. "shp" or "check mptc") and return its exit code."""
    try:
        bundle.validate()
    except InputError as exc:
        print(f"risktool: error: {exc}", file=sys.stderr)
        return EXIT_IO
    return main(bundle.argv(command))


def main(argv=None) -> int:
    try:
        args = resolve_args(argv)
    except InputError as exc:
        print(f"risktool: error: {exc}", file=sys.stderr)
        return EXIT_IO
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except HypothesisViolated as exc:
        msg = {"schema": SCHEMA, "command": args.command, "verdict": "hypothesis-violated",
               "message": str(exc), "hypotheses": exc.hypotheses}
        if args.out:
            write_atomic(os.path.join(args.out, "result.json"), msg)
        else:
            sys.stdout.write(json.dumps(_tolist(msg), indent=2, sort_keys=True) + "\n")
        return EXIT_HYP
    except (NumericalFailure, np.linalg.LinAlgError) as exc:
        print(f"risktool: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUM
    except (InputError, TreeError, MarketError, PolytopeError, RiskError, KeyError,
            TypeError, ValueError, OSError) as exc:
        print(f"risktool: error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())

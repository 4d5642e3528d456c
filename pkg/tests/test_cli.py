import json
import os
import subprocess
import sys

import numpy as np
import pytest

from setrisk.cli import (EXIT_FAILS, EXIT_HYP, EXIT_IO, EXIT_OK, DimUnsupported, ProblemBundle,
                         emit_plot_data, main, plot_polygon, run)
from setrisk.polytope import Polyhedron, support
from setrisk.riskmeasure import RandomSet
from setrisk.tree import uniform_tree

from conftest import fixture_path as fx

BINOMIAL = ["--tree", fx("binomial_tree.json"), "--market", fx("binomial_market.json"),
            "--claim", fx("digital_claim.json")]
BIDASK = ["--tree", fx("tree2.json"), "--market", fx("bidask_market.json"),
          "--claim", fx("claim2.json")]
SCALAR = ["--tree", fx("scalar_tree2.json"), "--market", fx("scalar_market.json"),
          "--claim", fx("scalar_claim2.json")]
RU = ["--tree", fx("ru_tree.json"), "--market", fx("ru_market.json"), "--claim", fx("ru_claim.json")]


def run_json(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


def node_set(payload, t, node):
    for item in payload["sets"]:
        if item["t"] == t and item["node"] == node:
            return Polyhedron.from_dict(item["polyhedron"])
    raise KeyError((t, node))


def test_shp_binomial(capsys):
    code, out = run_json(capsys, ["shp"] + BINOMIAL)
    assert code == EXIT_OK and out["schema"] == 1 and out["command"] == "shp"
    assert support(node_set(out, 0, "r"), [1, 1]) == pytest.approx(1 / 3, abs=1e-9)


def test_shp_exact(capsys):
    code, out = run_json(capsys, ["shp", "--exact", "--t", "0"] + BINOMIAL)
    assert code == EXIT_OK
    ex = out["sets"][0]["polyhedron"]["exact"]
    assert {"a": ["1", "1"], "b": "1/3"} in ex["H"]


def test_avar_ru_fixture(capsys):
    code, out = run_json(capsys, ["avar", "--lambda", "0.5", "--t", "0"] + RU)
    assert code == EXIT_OK
    P = node_set(out, 0, "r")
    assert support(P, [1, 0]) == pytest.approx(1.0, abs=1e-8)
    assert support(P, [-1, 0]) == -np.inf


def test_avar_lambda_file(capsys):
    code, out = run_json(capsys, ["avar", "--lambda", fx("lambda2.json"), "--t", "1"] + BIDASK)
    assert code == EXIT_OK
    assert out["parameters"]["lambda"]["a"] == [0.5, 1.0]
    assert {s["node"] for s in out["sets"]} == {"a", "b"}


def test_worst_case_and_risk(capsys):
    code, out = run_json(capsys, ["worst-case", "--t", "0"] + BIDASK)
    assert code == EXIT_OK
    P = node_set(out, 0, "r")
    assert support(P, [1, 0]) == pytest.approx(1.0) and support(P, [0, 1]) == pytest.approx(0.5)
    code, out = run_json(capsys, ["risk", "--acceptance", fx("closed_acceptance.json"),
                                  "--t", "0"] + RU)
    assert code == EXIT_OK
    assert support(node_set(out, 0, "r"), [1, 0]) == pytest.approx(1.0, abs=1e-7)


def test_check_mptc_avar_fails(capsys):
    code, out = run_json(capsys, ["check", "mptc", "--measure", "avar", "--lambda", "0.5"] + SCALAR)
    assert code == EXIT_FAILS
    assert out["verdict"] == "fails" and out["witness"]["claim"] is not None


def test_check_mptc_shp_holds(capsys):
    code, out = run_json(capsys, ["check", "mptc", "--measure", "shp"] + BINOMIAL)
    assert code == EXIT_OK and out["verdict"] == "holds"


def test_compose_then_recursion(capsys):
    code, out = run_json(capsys, ["compose", "--measure", "avar", "--lambda", "0.5"] + SCALAR)
    assert code == EXIT_OK and out["normalization"]["verdict"] == "holds"
    code, out = run_json(capsys, ["check", "recursion", "--measure", "avar", "--lambda", "0.5",
                                  "--composed", "--n-claims", "3"] + SCALAR)
    assert code == EXIT_OK and out["verdict"] == "holds"


def test_closed_counterexample_cli(capsys):
    base = ["--measure", "user", "--acceptance", fx("closed_acceptance.json")] + RU
    code, out = run_json(capsys, ["check", "tc"] + base)
    assert code == EXIT_OK and out["details"]["tested"] >= 100
    code, out = run_json(capsys, ["check", "mptc"] + base)
    assert code == EXIT_FAILS
    code, out = run_json(capsys, ["check", "market-compat"] + base)
    assert code == EXIT_HYP and out["verdict"] == "hypothesis-violated"


def test_check_axioms(capsys):
    code, out = run_json(capsys, ["check", "axioms", "--measure", "worst-case", "--t", "0",
                                  "--n-claims", "3"] + BINOMIAL)
    # coherent, but trading makes the orthant acceptance set too small
    assert code == EXIT_FAILS
    assert out["axioms"]["0"]["coherence"]["verdict"] == "holds"
    assert out["axioms"]["0"]["market_compatibility"]["verdict"] == "fails"
    code, out = run_json(capsys, ["check", "axioms", "--measure", "shp", "--t", "0",
                                  "--n-claims", "3"] + BINOMIAL)
    assert code == EXIT_OK and out["verdict"] == "holds"


def test_dual_verify_and_na_r(capsys):
    code, out = run_json(capsys, ["dual-verify", "--measure", "shp", "--n-pairs", "20",
                                  "--n-claims", "2"] + BINOMIAL)
    assert code == EXIT_OK
    assert out["report"]["inner"]["coverage"] == 1.0
    assert all(c["cpp_valid"] for c in out["certificates"])
    code, out = run_json(capsys, ["na-r"] + BINOMIAL[:4])
    assert code == EXIT_OK and out["certificate"]["ok"]


def test_dual_verify_with_pair_file(capsys, tmp_path):
    pair = {"t": 0, "Q": {"0": {"u": 1.0, "d": 1.0}, "1": {"u": 1.0, "d": 1.0}},
            "w": {"r": [1.0, 1.0]}}
    path = tmp_path / "pair.json"
    path.write_text(json.dumps(pair))
    code, out = run_json(capsys, ["dual-verify", "--measure", "worst-case", "--pairs", str(path),
                                  "--n-claims", "2"] + BINOMIAL)
    assert code == EXIT_OK and out["report"]["outer"]["pairs"] == 1


def test_exit_codes_for_bad_input(capsys, tmp_path):
    assert main(["shp", "--tree", str(tmp_path / "missing.json"), "--market",
                 fx("binomial_market.json"), "--claim", fx("digital_claim.json")]) == EXIT_IO
    assert main(["shp", "--tol", "-1"] + BINOMIAL) == EXIT_IO
    assert main(["nonsense"] + BINOMIAL) == EXIT_IO
    assert main(["check", "unknown-property"] + BINOMIAL) == EXIT_IO
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["shp", "--tree", str(bad), "--market", fx("binomial_market.json"),
                 "--claim", fx("digital_claim.json")]) == EXIT_IO
    capsys.readouterr()


def test_out_directory_and_plot_data(tmp_path, capsys):
    out = tmp_path / "res"
    assert main(["shp", "--out", str(out), "--bbox=-2,2,-2,2"] + BINOMIAL) == EXIT_OK
    result = json.loads((out / "result.json").read_text())
    plot = json.loads((out / "plot.json").read_text())
    assert result["schema"] == 1 and plot["bbox"] == [-2, 2, -2, 2]
    poly = plot["polygons"]["0"]["r"]
    assert poly["clipped"] and not poly["empty"]
    assert not [p for p in os.listdir(out) if p.startswith(".tmp-")]


def test_plot_polygon_examples():
    H = Polyhedron.from_h([[1, 0]], [0])
    res = plot_polygon(H, [-5, 5, -5, 5])
    assert len(res["vertices"]) == 4 and res["clipped"] and not res["empty"]
    assert sorted(map(tuple, res["vertices"])) == [(0, -5), (0, 5), (5, -5), (5, 5)]
    E = plot_polygon(Polyhedron.empty(2), [-5, 5, -5, 5])
    assert E == {"vertices": [], "empty": True, "clipped": False}
    sq = Polyhedron.from_v([[0, 0], [1, 0], [1, 1], [0, 1]])
    res = plot_polygon(sq, [-5, 5, -5, 5])
    assert not res["clipped"] and res["vertices"][0] == [0.0, 0.0]
    V = np.array(res["vertices"])
    area = 0.5 * sum(V[i, 0] * V[(i + 1) % 4, 1] - V[(i + 1) % 4, 0] * V[i, 1] for i in range(4))
    assert area == pytest.approx(1.0)                       # counterclockwise
    with pytest.raises(DimUnsupported):
        plot_polygon(Polyhedron.orthant(3), [-1, 1, -1, 1])


def test_emit_plot_data_rejects_other_dims():
    tree = uniform_tree(1, 2, 3)
    S = RandomSet(tree, 0, {"r": Polyhedron.orthant(3)})
    with pytest.raises(DimUnsupported):
        emit_plot_data(S)


def test_config_precedence(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"lambda": 0.5, "t": 1, "tol-geo": 1e-6}))
    code, out = run_json(capsys, ["avar", "--config", str(cfg)] + RU)
    assert code == EXIT_OK
    assert out["tolerances"]["tol_geo"] == 1e-6
    assert {s["t"] for s in out["sets"]} == {1}
    code, out = run_json(capsys, ["avar", "--config", str(cfg), "--t", "0"] + RU)
    assert {s["t"] for s in out["sets"]} == {0}
    assert support(node_set(out, 0, "r"), [1, 0]) == pytest.approx(1.0, abs=1e-8)
    cfg.write_text(json.dumps({"bogus": 1}))
    assert main(["avar", "--config", str(cfg)] + RU) == EXIT_IO
    capsys.readouterr()


def test_output_independent_of_thread_count(monkeypatch, capsys):
    outs = []
    for n in ("1", "4"):
        monkeypatch.setenv("RISKTOOL_THREADS", n)
        main(["dual-verify", "--measure", "shp", "--n-pairs", "10", "--n-claims", "2"] + BIDASK)
        outs.append(capsys.readouterr().out)
    assert outs[0] == outs[1]


def test_result_reloads(capsys):
    code, out = run_json(capsys, ["shp"] + BIDASK)
    again = node_set(json.loads(json.dumps(out)), 0, "r")
    first = node_set(out, 0, "r")
    assert support(again, [1, 1]) == pytest.approx(support(first, [1, 1]))


def test_run_with_bundle(tmp_path):
    b = ProblemBundle(tree=fx("binomial_tree.json"), market=fx("binomial_market.json"),
                      claim=fx("digital_claim.json"), out=str(tmp_path), params={"t": 0})
    assert run("shp", b) == EXIT_OK
    assert json.loads((tmp_path / "result.json").read_text())["command"] == "shp"
    assert run("shp", ProblemBundle(tree="nope.json", market=b.market)) == EXIT_IO


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "setrisk", "na-r"] + BINOMIAL[:4],
                         capture_output=True, text=True, timeout=120)
    assert res.returncode == 0
    assert json.loads(res.stdout)["certificate"]["ok"]

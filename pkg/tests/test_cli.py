import json

import numpy as np
import pytest

from lowdim_maxcut import __version__
from lowdim_maxcut.cli import main
from lowdim_maxcut.embedding import UnitEmbedding, save_embedding
from lowdim_maxcut.graph import cycle_graph, format_graph

from conftest import pentagon_embedding


@pytest.fixture
def c5(tmp_path):
    p = tmp_path / "c5.txt"
    p.write_text(format_graph(cycle_graph(5)))
    return str(p)


@pytest.fixture
def c5_embedding(tmp_path):
    p = tmp_path / "c5.json"
    p.write_text(save_embedding(pentagon_embedding()))
    return str(p)


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def report(path):
    return json.loads(open(path).read())


class TestSubcommands:
    def test_solve(self, c5, tmp_path, capsys):
        out = tmp_path / "r.json"
        emb = tmp_path / "e.json"
        code, stdout, _ = run(["solve", "--graph", c5, "--d", "2", "--json-out", str(out),
                               "--embedding-out", str(emb)], capsys)
        assert code == 0 and "PASS" in stdout
        r = report(out)
        assert r["schema"] == 1 and r["command"] == "solve" and r["version"] == __version__
        assert r["results"]["objective"] == pytest.approx(4.0, abs=1e-3)
        assert r["results"]["brute_force_maxcut"] == 4
        assert json.loads(emb.read_text())["n"] == 5

    def test_round_with_embedding(self, c5, c5_embedding, tmp_path, capsys):
        out = tmp_path / "r.json"
        code, _, _ = run(["round", "--graph", c5, "--embedding", c5_embedding,
                          "--trials", "200", "--json-out", str(out)], capsys)
        assert code == 0
        assert report(out)["passed"] is True

    def test_verify_geom(self, tmp_path, capsys):
        out = tmp_path / "r.json"
        code, _, _ = run(["verify-geom", "--random", "20", "3", "--samples", "20000",
                          "--json-out", str(out)], capsys)
        assert code == 0

    def test_powerseries_stdout(self, capsys):
        code, stdout, _ = run(["powerseries", "--random", "15", "2", "--json-out", "-"], capsys)
        assert code == 0
        assert json.loads(stdout)["command"] == "powerseries"

    def test_gegenbauer(self, capsys):
        code, stdout, _ = run(["gegenbauer", "--d", "3", "--json-out", "-"], capsys)
        assert code == 0
        assert json.loads(stdout)["passed"] is True

    def test_extremal(self, capsys):
        code, _, _ = run(["extremal", "--d", "3", "--n", "10", "--configs", "40",
                          "--samples", "1000", "--pairs", "20000"], capsys)
        assert code == 0

    def test_results_deterministic(self, capsys):
        argv = ["extremal", "--d", "3", "--n", "8", "--configs", "20", "--samples", "500",
                "--pairs", "5000", "--seed", "9", "--json-out", "-"]
        a = json.loads(run(argv, capsys)[1])
        b = json.loads(run(argv, capsys)[1])
        assert a["results"] == b["results"] and a["seed"] == 9


class TestExitCodes:
    def test_missing_file(self, capsys):
        code, _, err = run(["solve", "--graph", "/nonexistent/g.txt"], capsys)
        assert code == 2 and "cannot read" in err

    def test_malformed_graph(self, tmp_path, capsys):
        p = tmp_path / "bad.txt"
        p.write_text("3 1\n0 0 1\n")
        code, _, err = run(["solve", "--graph", str(p)], capsys)
        assert code == 2 and "line 2" in err

    def test_size_mismatch(self, c5, tmp_path, capsys):
        p = tmp_path / "e.json"
        p.write_text(save_embedding(UnitEmbedding(np.eye(3))))
        code, _, _ = run(["round", "--graph", c5, "--embedding", str(p)], capsys)
        assert code == 2

    def test_bad_arguments(self, capsys):
        with pytest.raises(SystemExit) as e:
            main(["gegenbauer"])
        assert e.value.code == 2

    def test_gegenbauer_small_d(self, capsys):
        code, _, _ = run(["gegenbauer", "--d", "2"], capsys)
        assert code == 2

    def test_failed_check(self, tmp_path, capsys):
        runs = tmp_path / "runs"
        runs.mkdir()
        (runs / "a.json").write_text(json.dumps(
            {"schema": 1, "command": "solve", "version": __version__, "passed": False}))
        code, stdout, _ = run(["report", str(runs)], capsys)
        assert code == 1 and "FAIL" in stdout


class TestReport:
    def test_empty_dir(self, tmp_path, capsys):
        code, _, _ = run(["report", str(tmp_path)], capsys)
        assert code == 0

    def test_two_runs(self, c5, c5_embedding, tmp_path, capsys):
        runs = tmp_path / "runs"
        runs.mkdir()
        run(["round", "--graph", c5, "--embedding", c5_embedding, "--trials", "50",
             "--json-out", str(runs / "b.json")], capsys)
        run(["gegenbauer", "--d", "3", "--json-out", str(runs / "a.json")], capsys)
        out = tmp_path / "summary.json"
        code, stdout, _ = run(["report", str(runs), "--json-out", str(out)], capsys)
        assert code == 0
        rows = report(out)["results"]["rows"]
        assert [r["command"] for r in rows] == ["gegenbauer", "round"]

    def test_mixed_versions_warn(self, tmp_path, capsys):
        for name, ver in (("a.json", "0.0.1"), ("b.json", __version__)):
            (tmp_path / name).write_text(json.dumps(
                {"schema": 1, "command": "x", "version": ver, "passed": True}))
        code, _, err = run(["report", str(tmp_path)], capsys)
        assert code == 0 and "several versions" in err

    def test_schema_mismatch(self, tmp_path, capsys):
        (tmp_path / "a.json").write_text(json.dumps({"schema": 99}))
        code, _, _ = run(["report", str(tmp_path)], capsys)
        assert code == 2

import json

import pytest

from ookshape.cli import main, parse_grid
from ookshape.protograph import BaseMatrix, builtin

INVOCATIONS = {
    "rates": ["rates", "--case", "2", "--rc", "0.5", "--snr-db=-4:4:2", "--curves", "0.5,0.75"],
    "select-rate": ["select-rate", "--rtx", "0.25,0.5", "--case", "2"],
    "threshold": ["threshold", "--base", "B1", "--rtx", "0.25", "--dump-surrogate"],
    "search": ["search", "--m", "3", "--n", "9", "--case", "2", "--rtx", "0.25",
               "--generations", "2", "--population", "6", "--seed", "3"],
    "lift": ["lift", "--base", "B2", "--q", "16", "--seed", "1"],
    "simulate": ["simulate", "--base", "U025", "--q", "16", "--no-matcher", "--rtx", "0.25",
                 "--ebn0", "0:2:1", "--min-errors", "5", "--max-frames", "64", "--seed", "4"],
}


def run_in(tmp_path, name, args):
    tmp_path.mkdir(parents=True, exist_ok=True)
    out = tmp_path / "out.txt"
    extra = ["--out", str(out)]
    if name == "rates":
        extra += ["--curves-out", str(tmp_path / "curves.csv")]
    assert main(args + extra) == 0
    return {p.name: p.read_bytes() for p in sorted(tmp_path.iterdir())}


class TestDeterminism:
    @pytest.mark.parametrize("name", sorted(INVOCATIONS))
    def test_repeat_is_byte_identical(self, tmp_path, name):
        first = run_in(tmp_path / "a", name, INVOCATIONS[name])
        second = run_in(tmp_path / "b", name, INVOCATIONS[name])
        assert first == second
        assert all(first.values())


class TestOutputs:
    def test_select_rate(self, tmp_path):
        files = run_in(tmp_path, "select-rate", INVOCATIONS["select-rate"])
        lines = files["out.txt"].decode().splitlines()
        assert lines[0] == "rate_tx,rate_code,es_n0_db"
        assert [ln.split(",")[1] for ln in lines[1:]] == ["0.67", "0.67"]

    def test_threshold_json(self, tmp_path):
        res = json.loads(run_in(tmp_path, "threshold", INVOCATIONS["threshold"])["out.txt"])
        assert res["gap_db"] == pytest.approx(res["threshold_db"] - res["rate_limit_db"],
                                              abs=1e-5)
        assert set(res["surrogate"]) == {"sigma2_tilde", "amp", "cond_entropy", "degenerate"}

    def test_search_writes_base_matrix(self, tmp_path):
        run_in(tmp_path, "search", INVOCATIONS["search"])
        assert BaseMatrix.load(tmp_path / "out.txt").shape == (3, 9)

    def test_base_from_file(self, tmp_path):
        path = tmp_path / "b.txt"
        builtin("B2").save(path)
        assert main(["lift", "--base", str(path), "--q", "8", "--out",
                     str(tmp_path / "l.json")]) == 0

    def test_simulate_writes_manifest(self, tmp_path):
        files = run_in(tmp_path, "simulate", INVOCATIONS["simulate"])
        manifest = json.loads(files["out.json"])
        assert manifest["seed"] == 4 and manifest["matcher"] is False
        assert len(files["out.txt"].decode().splitlines()) == 4


class TestErrors:
    def test_unknown_base(self, tmp_path):
        assert main(["threshold", "--base", "nope", "--rtx", "0.25"]) == 2

    def test_rate_mismatch(self, tmp_path):
        args = ["simulate", "--base", "B2", "--q", "16", "--case", "2", "--rtx", "0.25",
                "--rc", "0.5", "--ebn0", "0", "--out", str(tmp_path / "x.csv")]
        assert main(args) == 2

    def test_missing_subcommand(self):
        with pytest.raises(SystemExit):
            main([])

    def test_verbose_after_subcommand(self, capsys):
        assert main(["select-rate", "--rtx", "0.5", "-v"]) == 0
        assert capsys.readouterr().out.startswith("rate_tx")


class TestGrid:
    def test_inclusive_range(self):
        assert parse_grid("-1:1:0.5") == [-1.0, -0.5, 0.0, 0.5, 1.0]

    def test_list(self):
        assert parse_grid("0,1.5, 3") == [0.0, 1.5, 3.0]

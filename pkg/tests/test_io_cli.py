from __future__ import annotations

import numpy as np
import pytest

from granustat import io
from granustat.cli import EXIT_INFEASIBLE, EXIT_INVALID, EXIT_OK, EXIT_STATUS, EXIT_USAGE, RunConfig, main
from granustat.errors import ParseError
from granustat.fixtures import hex_cell_packing, lattice_packing, top_compression


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture
def hex_walls(tmp_path):
    p = tmp_path / "hex.pk"
    assert run("generate", "--kind", "hex-cell", "--groups", "walls", "--motion", "top-compression", "--out", p) == EXIT_OK
    return p


class TestPackingFiles:
    @pytest.mark.parametrize("packing", [hex_cell_packing(), lattice_packing(4, 4, grouping="walls")])
    def test_round_trip(self, packing):
        text = io.dumps_packing(packing, top_compression(0.1) if len(packing.groups) == 3 else {})
        back, motions = io.loads_packing(text)
        assert back == packing
        assert io.dumps_packing(back, motions) == text

    def test_awkward_floats_survive(self):
        p = hex_cell_packing(radius=1 / 3)
        back, _ = io.loads_packing(io.dumps_packing(p))
        assert np.array_equal(back.centers, p.centers)

    @pytest.mark.parametrize(
        "text",
        [
            "",
            "DISKS\n0 0 0 1\nEND\n",
            "# granustat packing v1\nDISKS\n0 0 zero 1\nEND\n",
            "# granustat packing v1\nDISKS\n0 0 0 1\n",
            "# granustat packing v1\nDISKS\n0 0 0 1\nDISKS\nEND\n",
            "# granustat packing v1\nDISKS\n0 0 0 1\nMOTIONS\nghost 0 0 0 0 0\nEND\n",
            "# granustat packing v1\n0 0 0 1\nEND\n",
        ],
    )
    def test_malformed(self, text):
        with pytest.raises(ParseError):
            io.loads_packing(text)

    def test_report_round_trip(self):
        items = [("a", 1), ("b", [0.1, 2.5]), ("c", True), ("d", None)]
        rep = io.loads_report(io.dumps_report(items))
        assert rep == {"a": "1", "b": "0.10000000000000001 2.5", "c": "true", "d": "none"}
        assert io.report_floats(rep, "b").tolist() == [0.1, 2.5]
        with pytest.raises(ParseError):
            io.report_floats(rep, "zz")

    def test_report_key_guard(self):
        with pytest.raises(ValueError):
            io.dumps_report([("bad:key", 1)])


class TestGenerate:
    def test_hex_cell(self, tmp_path):
        p = tmp_path / "h.pk"
        assert run("generate", "--kind", "hex-cell", "--out", p) == EXIT_OK
        pk, _ = io.read_packing(p)
        assert pk.n == 7 and pk.boundary_ids == {1, 2, 3, 4, 5, 6}

    def test_lattice_round_trip(self, tmp_path):
        p = tmp_path / "l.pk"
        assert run("generate", "--kind", "tri-lattice", "--rows", 4, "--cols", 4, "--out", p) == EXIT_OK
        pk, m = io.read_packing(p)
        assert pk == lattice_packing(4, 4)
        assert io.dumps_packing(pk, m) == p.read_text()

    def test_unknown_kind(self, tmp_path):
        with pytest.raises(SystemExit) as info:
            run("generate", "--kind", "pentagon", "--out", tmp_path / "x")
        assert info.value.code == EXIT_USAGE


class TestValidate:
    def test_hex_cell(self, hex_walls, capsys):
        assert run("validate", "--input", hex_walls) == EXIT_OK
        assert "overall: true" in capsys.readouterr().out

    def test_square(self, tmp_path, capsys):
        p = tmp_path / "sq.pk"
        run("generate", "--kind", "square-lattice", "--rows", 3, "--cols", 3, "--out", p)
        assert run("validate", "--input", p) == EXIT_INVALID
        assert "not a triangulation" in capsys.readouterr().out

    def test_malformed(self, tmp_path):
        p = tmp_path / "bad.pk"
        p.write_text("hello\n")
        assert run("validate", "--input", p) == EXIT_USAGE

    def test_missing_file(self, tmp_path):
        assert run("validate", "--input", tmp_path / "nope.pk") == EXIT_USAGE


class TestSolve:
    def test_inward_is_infeasible(self, tmp_path):
        p, out = tmp_path / "h.pk", tmp_path / "s.txt"
        run("generate", "--kind", "hex-cell", "--groups", "sectors", "--motion", "inward", "--out", p)
        assert run("solve", "--input", p, "--out", out) == EXIT_INFEASIBLE
        rep = io.read_report(out)
        assert rep["status"] == "infeasible" and float(rep["phase1_residual"]) > 0

    def test_outward_uniform(self, tmp_path):
        p, out = tmp_path / "h.pk", tmp_path / "s.txt"
        run("generate", "--kind", "hex-cell", "--groups", "sectors", "--motion", "outward", "--out", p)
        assert run("solve", "--input", p, "--out", out, "--d", 1000, "--uniform-delta", 0.75) == EXIT_OK
        rep = io.read_report(out)
        assert rep["status"] == "unconstrained-feasible" and rep["a1_holds"] == "false"
        assert rep["generic"] == "false"

    def test_top_compression(self, hex_walls, tmp_path):
        out = tmp_path / "s.txt"
        assert run("solve", "--input", hex_walls, "--out", out, "--d", 256, "--seed", 3) == EXIT_OK
        rep = io.read_report(out)
        assert rep["status"] == "optimal" and rep["active_set"] != "none"
        assert rep["kkt_passed"] == "true" and rep["a1_holds"] == "true"
        assert rep["seed"] == "3" and len(rep["delta"].split()) == 12

    def test_ladder_and_matrix(self, hex_walls, tmp_path):
        out, mm = tmp_path / "s.txt", tmp_path / "R.mtx"
        assert run("solve", "--input", hex_walls, "--out", out, "--d-ladder", "4,16,64,256", "--export-matrix", mm) == EXIT_OK
        rep = io.read_report(out)
        assert [rep[f"scan.{k}"].split()[0] for k in range(4)] == ["4", "16", "64", "256"]
        assert float(rep["d"]) == 256
        assert mm.read_text().startswith("%%MatrixMarket")

    def test_bad_ladder(self, hex_walls, tmp_path):
        assert run("solve", "--input", hex_walls, "--out", tmp_path / "s", "--d-ladder", "64,8") == EXIT_USAGE

    def test_irregular_needs_force(self, tmp_path):
        p = tmp_path / "sq.pk"
        run("generate", "--kind", "square-lattice", "--rows", 3, "--cols", 3, "--out", p)
        assert run("solve", "--input", p, "--out", tmp_path / "s") == EXIT_INVALID

    def test_seed_env_override(self, hex_walls, tmp_path, monkeypatch):
        a, b = tmp_path / "a", tmp_path / "b"
        monkeypatch.setenv("GRANUSTAT_SEED", "11")
        run("solve", "--input", hex_walls, "--out", a, "--seed", 1)
        monkeypatch.delenv("GRANUSTAT_SEED")
        run("solve", "--input", hex_walls, "--out", b, "--seed", 11)
        assert io.read_report(a)["seed"] == "11"
        assert a.read_bytes() == b.read_bytes()


class TestAnalyzeRender:
    def test_pipeline(self, hex_walls, tmp_path):
        s, a, svg = tmp_path / "s", tmp_path / "a", tmp_path / "r.svg"
        assert run("solve", "--input", hex_walls, "--out", s, "--d", 256) == EXIT_OK
        assert run("analyze", "--input", s, "--out", a) == EXIT_OK
        rep = io.read_report(a)
        assert rep["theorem_holds"] == "true"
        assert rep["theorem.0"].startswith("PASS")
        assert len(set(rep["rho.7"].split())) == 1
        assert run("render", "--input", s, "--analysis", a, "--out", svg) == EXIT_OK
        text = svg.read_text()
        assert text.count("<circle") == 7 and text.count('<line class="') == 12
        assert 'id="legend"' in text and 'id="deformed"' not in text
        assert run("render", "--input", s, "--analysis", a, "--out", svg, "--deformed") == EXIT_OK
        text = svg.read_text()
        assert 'id="deformed"' in text and text.count("<circle") == 14

    def test_unconstrained_input(self, tmp_path):
        p, s = tmp_path / "h.pk", tmp_path / "s"
        run("generate", "--kind", "hex-cell", "--groups", "sectors", "--motion", "outward", "--out", p)
        run("solve", "--input", p, "--out", s, "--d", 1000, "--uniform-delta", 0.75)
        assert run("analyze", "--input", s, "--out", tmp_path / "a") == EXIT_STATUS

    def test_all_broken_render_is_dashed(self, hex_walls, tmp_path):
        s, a, svg = tmp_path / "s", tmp_path / "a", tmp_path / "r.svg"
        run("solve", "--input", hex_walls, "--out", s, "--d", 256)
        a.write_text("".join(f"edge.{l}: 0 0 broken 1 0\n" for l in range(12)))
        assert run("render", "--input", s, "--analysis", a, "--out", svg) == EXIT_OK
        text = svg.read_text()
        assert text.count('<line class="broken"') == 12
        assert text.count("stroke-dasharray") >= 12


class TestConfig:
    def test_invalid_tolerance(self):
        with pytest.raises(ValueError):
            RunConfig("solve", tol_kkt=0.0)

    def test_ladder_order(self):
        with pytest.raises(ValueError):
            RunConfig("solve", d_ladder=(4.0, 4.0))

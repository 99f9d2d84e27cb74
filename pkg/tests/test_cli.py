from __future__ import annotations

import math

import pytest

from fracmeasure.commands import control, converge, eig, quadcheck, solve
from fracmeasure.config import parse_config
from fracmeasure.excel import read_xlsx
from fracmeasure.main import EXIT_CONFIG, EXIT_FAILURE, EXIT_OK, _build_parser, run
from fracmeasure.writers import format_number, read_vtk_point_count


class TestExitCodes:
    def test_success(self, capsys):
        assert run(["eig", "--n", "4"]) == EXIT_OK
        assert "smallest" in capsys.readouterr().out

    def test_config_error(self, capsys):
        assert run(["solve", "--point", "0.3,0.7", "--bogus", "1"]) == EXIT_CONFIG
        assert "bogus" in capsys.readouterr().err

    def test_short_key_is_not_config(self, capsys):
        args, rest = _build_parser().parse_known_args(["quadcheck", "--c", "3", "--s", "0.6"])
        assert args.config_file is None
        assert rest == ["--c", "3", "--s", "0.6"]
        assert run(["quadcheck", "--c", "3", "--s", "0.6", "--n", "64"]) == EXIT_OK
        Y = 3 * 0.6 * math.log(64)
        assert f"Y: {format_number(Y)}" in capsys.readouterr().out

    def test_failure(self, capsys):
        assert run(["solve", "--n", "4", "--point", "0,0.5", "--scheme", "ideal"]) == EXIT_FAILURE
        assert capsys.readouterr().err.startswith("error:")


class TestCommands:
    def test_quadcheck_half(self, capsys):
        report = quadcheck.run(parse_config("quadcheck", flags={"s": "0.5", "n": "16"}))
        assert report.psi_all_equal
        assert len(report.rows) == 50

    def test_eig_rayleigh_bound(self, tmp_path, capsys):
        csv_path = tmp_path / "eig.csv"
        report = eig.run(parse_config("eig", flags={"n": "16", "output_csv": str(csv_path)}))
        assert report.n_interior == 225
        assert report.smallest >= 2 * math.pi**2
        assert report.rayleigh_bound_holds
        assert report.residual < 1e-8
        assert csv_path.read_text(encoding="utf-8").count("\n") == 226

    def test_solve_ideal_writes_vtk(self, tmp_path, capsys):
        vtk_path = tmp_path / "out" / "u.vtk"
        flags = {"n": "16", "point": "0.3,0.7", "scheme": "ideal", "output_vtk": str(vtk_path)}
        summary = solve.run(parse_config("solve", flags=flags))
        assert read_vtk_point_count(vtk_path) == 17 * 17
        assert summary.argmax == pytest.approx([0.3125, 0.6875], abs=1.0 / 16)
        assert summary.K is None

    def test_solve_writes_tables(self, tmp_path, capsys):
        csv_path = tmp_path / "solve.csv"
        xlsx_path = tmp_path / "solve.xlsx"
        flags = {"n": "8", "point": "0.375,0.625", "scheme": "ideal", "output_csv": str(csv_path), "output_xlsx": str(xlsx_path)}
        summary = solve.run(parse_config("solve", flags=flags))
        header, row = csv_path.read_text(encoding="utf-8").splitlines()
        assert header.split(",")[:2] == ["scheme", "n_interior"]
        assert row.split(",")[:2] == ["ideal", "49"]
        [record] = read_xlsx(xlsx_path)
        assert record["u_max"] == pytest.approx(summary.u_max)
        assert record["argmax_x"] == pytest.approx(0.375)

    def test_control_ideal(self, tmp_path, capsys):
        flags = {
            "n": "8",
            "obs_points": "0.375,0.625; 0.625,0.375",
            "targets": "0.5,-0.5",
            "output_csv": str(tmp_path / "cost.csv"),
        }
        summary = control.run(parse_config("control", flags=flags))
        assert summary.vi_residual <= 1e-10
        assert -5.0 <= summary.q_min <= summary.q_max <= 5.0
        assert (tmp_path / "cost.csv").exists()

    def test_converge_self(self, tmp_path, capsys):
        xlsx_path = tmp_path / "conv.xlsx"
        flags = {"point": "0.25,0.75", "scheme": "ideal", "n_list": "4,8", "reference_n": "16", "output_xlsx": str(xlsx_path)}
        table = converge.run(parse_config("converge", flags=flags))
        assert [row.n for row in table.rows] == [4, 8]
        assert table.errors[0] > table.errors[1]
        assert [row["n"] for row in read_xlsx(xlsx_path)] == [4, 8]

    @pytest.mark.slow
    def test_dirac_preset(self, capsys):
        summary = solve.run(parse_config("solve", flags={"preset": "paper-dirac", "n": "64"}))
        h = 1.0 / 64
        assert math.dist(summary.argmax, (0.3, 0.7)) <= 2 * h
        assert summary.u_min >= -1e-10
        assert summary.K == 2852

    @pytest.mark.slow
    def test_circle_preset(self, capsys):
        summary = solve.run(parse_config("solve", flags={"preset": "paper-circle", "n": "64"}))
        h = 1.0 / 64
        assert abs(math.dist(summary.argmax, (0.5, 0.5)) - 0.3) <= 2 * h
        assert summary.u_min >= -1e-10

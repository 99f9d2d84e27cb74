from __future__ import annotations

import math

import numpy as np
import pytest
from openpyxl import load_workbook

from fracmeasure.errors import ParseError
from fracmeasure.excel import FLOAT_FORMAT, read_xlsx, write_xlsx
from fracmeasure.fem import interpolate
from fracmeasure.writers import csv_text, format_number, read_vtk_point_count, write_csv, write_vtk


class TestFormatNumber:
    def test_significant_digits(self):
        assert format_number(math.pi) == "3.14159265359"
        assert format_number(np.float64(1e-20)) == "1e-20"

    def test_other_values(self):
        assert format_number(None) == ""
        assert format_number(True) == "true"
        assert format_number(np.int64(7)) == "7"
        assert format_number("disk") == "disk"


class TestCSV:
    def test_table(self):
        text = csv_text(["n", "error", "order"], [[8, 0.1, None], [16, 0.025, 2.0]])
        assert text.splitlines() == ["n,error,order", "8,0.1,", "16,0.025,2"]

    def test_deterministic(self, tmp_path):
        rows = [[n, 1.0 / n**2] for n in (4, 8, 16)]
        first = write_csv(tmp_path / "a.csv", ["n", "error"], rows).read_bytes()
        second = write_csv(tmp_path / "nested" / "b.csv", ["n", "error"], rows).read_bytes()
        assert first == second


class TestVTK:
    def test_point_count(self, tmp_path, square8):
        u = interpolate(square8, lambda x, y: x * y)
        path = write_vtk(tmp_path / "u.vtk", square8, {"u": u})
        assert read_vtk_point_count(path) == square8.num_vertices
        text = path.read_text(encoding="utf-8")
        assert f"CELLS {square8.num_triangles} {4 * square8.num_triangles}" in text
        assert "SCALARS u double 1" in text

    def test_field_on_other_mesh(self, tmp_path, square8, square16):
        with pytest.raises(ValueError):
            write_vtk(tmp_path / "u.vtk", square8, {"u": interpolate(square16, lambda x, y: x)})

    def test_missing_points(self, tmp_path):
        path = tmp_path / "empty.vtk"
        path.write_text("# vtk DataFile Version 2.0\n", encoding="utf-8")
        with pytest.raises(ParseError):
            read_vtk_point_count(path)


class TestXLSX:
    def test_round_trip(self, tmp_path):
        path = write_xlsx(tmp_path / "table.xlsx", ["n", "error"], [[np.int64(8), np.float64(0.5)], [16, None]], title="errors")
        rows = read_xlsx(path)
        assert rows[0] == {"n": 8, "error": 0.5}
        assert rows[1]["n"] == 16

    def test_layout(self, tmp_path):
        path = write_xlsx(
            tmp_path / "table.xlsx", ["n", "error"], [[8, 0.125], [16, 0.03125]], title="errors", metadata={"s": 0.65}
        )
        workbook = load_workbook(path)
        table = workbook["errors"]
        assert table.freeze_panes == "A2"
        assert table["B2"].number_format == FLOAT_FORMAT
        assert table["A1"].font.bold
        assert [list(row) for row in workbook["run"].iter_rows(values_only=True)] == [["s", 0.65]]

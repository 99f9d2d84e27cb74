"""XLSX export of result tables."""

from __future__ import annotations

from io import BytesIO
from pathlib import Path
from typing import Iterable, List, Mapping, Sequence

from openpyxl import Workbook, load_workbook
from openpyxl.styles import Font, PatternFill
from openpyxl.utils import get_column_letter

from .storage import write_bytes

HEADER_FILL = PatternFill(start_color="2F5496", end_color="2F5496", fill_type="solid")
HEADER_FONT = Font(color="FFFFFF", bold=True)
STRIPE_FILL = PatternFill(start_color="F4F6FD", end_color="F4F6FD", fill_type="solid")
# 12 significant digits, matching the CSV tables
FLOAT_FORMAT = "0.00000000000E+00"
MIN_WIDTH = 10


def build_xlsx(
    headers: Sequence[str],
    rows: Iterable[Sequence[object]],
    *,
    title: str = "results",
    metadata: Mapping[str, object] | None = None,
) -> bytes:
    """Workbook bytes: one striped table sheet with a frozen header, plus an optional ``run`` sheet."""

    wb = Workbook()
    table = wb.active
    table.title = title[:31]
    table.append(list(headers))
    for cell in table[1]:
        cell.font = HEADER_FONT
        cell.fill = HEADER_FILL
    table.freeze_panes = "A2"

    widths = [max(MIN_WIDTH, len(str(name)) + 2) for name in headers]
    for index, row in enumerate(rows, start=2):
        table.append([_cell_value(value) for value in row])
        for column, cell in enumerate(table[index]):
            if isinstance(cell.value, float):
                cell.number_format = FLOAT_FORMAT
            elif column < len(widths):
                widths[column] = max(widths[column], len(str(cell.value)) + 2)
            if index % 2 == 0:
                cell.fill = STRIPE_FILL
    for column, width in enumerate(widths, start=1):
        table.column_dimensions[get_column_letter(column)].width = max(width, len(FLOAT_FORMAT))

    if metadata:
        run = wb.create_sheet("run")
        for key, value in metadata.items():
            run.append([key, _cell_value(value)])

    buffer = BytesIO()
    wb.save(buffer)
    return buffer.getvalue()


def write_xlsx(
    path: str | Path,
    headers: Sequence[str],
    rows: Iterable[Sequence[object]],
    *,
    title: str = "results",
    metadata: Mapping[str, object] | None = None,
) -> Path:
    return write_bytes(path, build_xlsx(headers, rows, title=title, metadata=metadata))


def read_xlsx(path: str | Path) -> List[dict[str, object]]:
    """Rows of the first sheet keyed by header."""

    workbook = load_workbook(Path(path), data_only=True)
    sheet = workbook.worksheets[0]
    rows = sheet.iter_rows(values_only=True)
    headers = [str(cell).strip() for cell in next(rows, ()) if cell is not None]
    return [dict(zip(headers, row)) for row in rows]


def _cell_value(value: object) -> object:
    if value is None:
        return None
    if hasattr(value, "item"):
        return value.item()
    if isinstance(value, (list, tuple)):
        return ", ".join(str(item) for item in value)
    return value

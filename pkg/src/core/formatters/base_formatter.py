# src/core/formatters/base_formatter.py
from openpyxl.styles import Alignment, Border, Font, PatternFill, Side
from openpyxl.worksheet.worksheet import Worksheet
from typing import Iterable, Sequence

HEADER_FILL = PatternFill(start_color="CCE5FF", end_color="CCE5FF", fill_type="solid")
HEADER_FONT = Font(bold=True, size=12)
CENTERED = Alignment(horizontal='center', vertical='center', wrap_text=True)
THIN = Side(style='thin')
HEADER_BORDER = Border(top=Side(style='medium'), bottom=Side(style='medium'), left=THIN, right=THIN)
DATA_BORDER = Border(top=THIN, bottom=THIN, left=THIN, right=THIN)
MAX_COLUMN_WIDTH = 40


class SheetFormatter:
    """Shared worksheet styling for all report formatters"""

    @staticmethod
    def _write_header(ws: Worksheet, headers: Sequence[str], row: int = 1) -> None:
        for col, header in enumerate(headers, 1):
            SheetFormatter._apply_header_style(ws.cell(row=row, column=col, value=header))

    @staticmethod
    def _write_rows(ws: Worksheet, rows: Iterable[Sequence], start_row: int = 2) -> int:
        """Writes rows below the header and returns the next free row"""
        row = start_row
        for values in rows:
            for col, value in enumerate(values, 1):
                SheetFormatter._apply_data_style(ws.cell(row=row, column=col, value=value))
            row += 1
        return row

    @staticmethod
    def _apply_header_style(cell) -> None:
        cell.font = HEADER_FONT
        cell.fill = HEADER_FILL
        cell.border = HEADER_BORDER
        cell.alignment = CENTERED

    @staticmethod
    def _apply_data_style(cell) -> None:
        cell.border = DATA_BORDER
        cell.alignment = CENTERED

    @staticmethod
    def _adjust_column_widths(ws: Worksheet) -> None:
        for column in ws.columns:
            cells = list(column)
            longest = max((len(str(c.value)) for c in cells if c.value is not None), default=0)
            ws.column_dimensions[cells[0].column_letter].width = min(longest + 2, MAX_COLUMN_WIDTH)

    @staticmethod
    def _round(value, digits: int = 6):
        try:
            return round(float(value), digits)
        except (TypeError, ValueError):
            return value

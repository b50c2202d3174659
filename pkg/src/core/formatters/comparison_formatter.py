# src/core/formatters/comparison_formatter.py
from openpyxl import Workbook
from openpyxl.worksheet.worksheet import Worksheet
import pandas as pd
from typing import Optional

from .base_formatter import SheetFormatter


class ComparisonFormatter(SheetFormatter):
    """Formats normalized sweep results (ratios against the static baseline)"""

    COLUMNS = ["cell", "policy", "baseline", "metric", "mean", "ci_low", "ci_high", "n", "impact"]

    @staticmethod
    def format_results(wb: Workbook, summary: pd.DataFrame, prefix: str = "") -> None:
        ws = wb.active
        title_prefix = f"{prefix} " if prefix else ""
        ws.title = f"{title_prefix}Normalized Results"[:31]
        ComparisonFormatter.format_results_to_sheet(ws, summary)

    @staticmethod
    def format_results_to_sheet(ws: Worksheet, summary: pd.DataFrame) -> None:
        columns = [c for c in ComparisonFormatter.COLUMNS if c in summary.columns]
        headers = [c.replace('_', ' ').title() for c in columns]
        ComparisonFormatter._write_header(ws, headers)
        rows = (
            [ComparisonFormatter._round(getattr(row, c)) if c in ('mean', 'ci_low', 'ci_high') else getattr(row, c)
             for c in columns]
            for row in summary.itertuples(index=False)
        )
        ComparisonFormatter._write_rows(ws, rows)
        ComparisonFormatter._adjust_column_widths(ws)

    @staticmethod
    def format_misses(wb: Workbook, misses: pd.DataFrame, title: str = "Deadline Misses") -> None:
        ws = wb.create_sheet(title[:31])
        ComparisonFormatter._write_header(ws, [c.replace('_', ' ').title() for c in misses.columns])
        ComparisonFormatter._write_rows(ws, (list(r) for r in misses.itertuples(index=False)))
        ComparisonFormatter._adjust_column_widths(ws)

    @staticmethod
    def format_reductions(wb: Workbook, reductions: pd.DataFrame, title: str = "Paired Reduction") -> None:
        """Relative reductions against immediate-next; positive means lower"""
        ws = wb.create_sheet(title[:31])
        ComparisonFormatter.format_results_to_sheet(ws, reductions)

    @staticmethod
    def format_k_sweep(wb: Workbook, means: pd.DataFrame, k_star: Optional[int]) -> None:
        """Per-k mean normalized metrics plus the selected depth"""
        ws = wb.create_sheet("K Sweep")
        ComparisonFormatter._write_header(ws, [c.replace('_', ' ').title() for c in means.columns])
        end = ComparisonFormatter._write_rows(
            ws, ([ComparisonFormatter._round(v) for v in r] for r in means.itertuples(index=False)))
        if k_star is not None:
            ws.cell(row=end + 1, column=1, value="Selected k")
            ws.cell(row=end + 1, column=2, value=k_star)
            ComparisonFormatter._apply_header_style(ws.cell(row=end + 1, column=1))
            ComparisonFormatter._apply_data_style(ws.cell(row=end + 1, column=2))
        ComparisonFormatter._adjust_column_widths(ws)

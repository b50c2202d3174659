# src/core/formatters/metrics_formatter.py
from openpyxl import Workbook
from openpyxl.worksheet.worksheet import Worksheet

from ..statistics.metrics import Metrics
from .base_formatter import SheetFormatter


class MetricsFormatter(SheetFormatter):
    """Formats the metrics of a single run into Excel worksheets"""

    @staticmethod
    def format_results(wb: Workbook, metrics: Metrics, prefix: str = "") -> None:
        ws = wb.active
        title_prefix = f"{prefix} " if prefix else ""
        ws.title = f"{title_prefix}Run Metrics"[:31]
        MetricsFormatter.format_results_to_sheet(ws, metrics)
        MetricsFormatter.format_core_peaks(wb.create_sheet(f"{title_prefix}Core Peaks"[:31]), metrics)

    @staticmethod
    def format_results_to_sheet(ws: Worksheet, metrics: Metrics) -> None:
        MetricsFormatter._write_header(ws, ["Metric", "Value", "Unit"])
        rows = [
            ("Peak system power", MetricsFormatter._round(metrics.peak_system_power), "W"),
            ("Max per-core peak power", MetricsFormatter._round(metrics.max_peak_core_power), "W"),
            ("Total energy", MetricsFormatter._round(metrics.total_energy), "J"),
            ("Max temperature", MetricsFormatter._round(metrics.max_temperature, 3), "°C"),
            ("Deadline misses", metrics.deadline_miss_count, ""),
            ("LC tasks dropped", metrics.lc_dropped_count, ""),
            ("Mode switches", metrics.mode_switch_count, ""),
            ("Executed tasks", metrics.executed_tasks, ""),
            ("Slack events", metrics.slack_events, ""),
            ("V-f switches", metrics.vf_switches, ""),
            ("Re-mappings", metrics.remaps, ""),
            ("Makespan", MetricsFormatter._round(metrics.makespan, 3), "ms"),
        ]
        rows.extend((f"Pairing: {k}", str(v), "") for k, v in sorted(metrics.pairing.items()))
        MetricsFormatter._write_rows(ws, rows)
        MetricsFormatter._adjust_column_widths(ws)

    @staticmethod
    def format_core_peaks(ws: Worksheet, metrics: Metrics) -> None:
        MetricsFormatter._write_header(ws, ["Core / Cluster", "Peak power (W)"])
        rows = [(f"core {c}", MetricsFormatter._round(p)) for c, p in sorted(metrics.peak_core_power.items())]
        rows += [(f"cluster {c}", MetricsFormatter._round(p)) for c, p in sorted(metrics.peak_cluster_power.items())]
        MetricsFormatter._write_rows(ws, rows)
        MetricsFormatter._adjust_column_widths(ws)

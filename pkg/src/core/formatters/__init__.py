from .comparison_formatter import ComparisonFormatter
from .metrics_formatter import MetricsFormatter

__all__ = ['ComparisonFormatter', 'MetricsFormatter']

from .comparison import ComparisonCalculator, aggregate, compare, confidence_interval
from .metrics import Metrics, peak_of_sum, summarize
from .optimal_k import optimal_k

__all__ = ['ComparisonCalculator', 'aggregate', 'compare', 'confidence_interval',
           'Metrics', 'peak_of_sum', 'summarize', 'optimal_k']

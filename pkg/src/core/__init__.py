from .analyzer import RunAnalyzer
from .experiment_manager import ExperimentManager, ExperimentSpec

__all__ = ['RunAnalyzer', 'ExperimentManager', 'ExperimentSpec']

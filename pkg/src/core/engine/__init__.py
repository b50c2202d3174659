from .governor import DvfsGovernor, governor_tick
from .simulator import Simulator, mode_switch, run_period

__all__ = ['DvfsGovernor', 'governor_tick', 'Simulator', 'mode_switch', 'run_period']

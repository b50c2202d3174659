# src/core/errors.py
"""Exception hierarchy shared by the simulator, the experiment harness and the CLI."""
from typing import Optional

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_UNSCHEDULABLE = 4
EXIT_SIMULATION_FAULT = 5


class MCPPError(Exception):
    exit_code = 1


class ConfigError(MCPPError):
    """Invalid parameters, flags or configuration documents."""
    exit_code = EXIT_USAGE


class DomainError(MCPPError, ValueError):
    """An argument lies outside the domain of a model operation."""
    exit_code = EXIT_USAGE


class PairingError(DomainError):
    """Two runs compared against each other do not share graph, platform and seed."""


class GenerationError(MCPPError):
    exit_code = EXIT_INFEASIBLE


class UnschedulableError(MCPPError):
    exit_code = EXIT_UNSCHEDULABLE

    def __init__(self, message: str, task_id: Optional[int] = None):
        super().__init__(message)
        self.task_id = task_id


class SimulationFault(MCPPError):
    exit_code = EXIT_SIMULATION_FAULT


class DeadlineMissError(SimulationFault):
    def __init__(self, task_id: int, time: float, deadline: float, cause: str):
        super().__init__(
            f"Task {task_id} finished at {time:.6f} ms after its deadline {deadline:.6f} ms ({cause})"
        )
        self.task_id = task_id
        self.time = time
        self.deadline = deadline
        self.cause = cause

"""Exception hierarchy for the picking simulator.

Every exception keeps its constructor arguments in ``args`` so it survives the
pickling round trip of a process pool.
"""

from __future__ import annotations


class PickingError(Exception):
    """Base class for all simulator errors."""


class ConfigError(PickingError, ValueError):
    def __init__(self, key: str, message: str) -> None:
        super().__init__(key, message)
        self.key = key
        self.message = message

    def __str__(self) -> str:
        return f"invalid config key '{self.key}': {self.message}"


class ContractViolation(PickingError, RuntimeError):
    """A caller broke an operation's precondition; this is a bug, not a failed grasp."""


class HeapGenerationError(PickingError, RuntimeError):
    def __init__(self, attempt_limit: int, placed: int, requested: int) -> None:
        super().__init__(attempt_limit, placed, requested)
        self.attempt_limit = attempt_limit
        self.placed = placed
        self.requested = requested

    def __str__(self) -> str:
        return (
            f"could not place {self.requested} objects within {self.attempt_limit} rejection attempts "
            f"(best layout held {self.placed}); the bin is too small for this heap"
        )


class EngineFault(PickingError, RuntimeError):
    def __init__(self, step: int, message: str) -> None:
        super().__init__(step, message)
        self.step = step
        self.message = message

    def __str__(self) -> str:
        return f"engine fault at step {self.step}: {self.message}"


class BatchFault(PickingError, RuntimeError):
    def __init__(self, trial_index: int, message: str) -> None:
        super().__init__(trial_index, message)
        self.trial_index = trial_index
        self.message = message

    def __str__(self) -> str:
        return f"trial {self.trial_index} aborted the batch: {self.message}"


class LogFormatError(PickingError, ValueError):
    def __init__(self, line_number: int, message: str) -> None:
        super().__init__(line_number, message)
        self.line_number = line_number
        self.message = message

    def __str__(self) -> str:
        return f"line {self.line_number}: {self.message}"

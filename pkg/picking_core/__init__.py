from .environment import EnvConfig, EnvironmentKind, ProbabilisticConfig, generate_heap
from .errors import ConfigError, ContractViolation, PickingError
from .metrics import AggregateReport, TrialStats, aggregate, trial_stats
from .model import Action, HeapState, TimeModel, TrialLog, evaluate_grasp, remove_object
from .policies import MaskState, PickingPolicy, PolicyConfig, PolicyKind

__version__ = "1.0.0"

__all__ = [
    "Action",
    "AggregateReport",
    "ConfigError",
    "ContractViolation",
    "EnvConfig",
    "EnvironmentKind",
    "HeapState",
    "MaskState",
    "PickingError",
    "PickingPolicy",
    "PolicyConfig",
    "PolicyKind",
    "ProbabilisticConfig",
    "TimeModel",
    "TrialLog",
    "TrialStats",
    "__version__",
    "aggregate",
    "evaluate_grasp",
    "generate_heap",
    "remove_object",
    "trial_stats",
]

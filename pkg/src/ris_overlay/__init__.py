"""Two-beam reconfigurable-surface profile overlay with search baselines and a DQN agent."""
from .config import DqnConfig, ScenarioConfig
from .errors import FormatError, StateError, ValidationError
from .scenario import Scenario

__all__ = ["DqnConfig", "FormatError", "Scenario", "ScenarioConfig", "StateError", "ValidationError"]
__version__ = "0.1.0"

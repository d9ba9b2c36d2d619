"""Domain-independent reactive and anticipatory counterplanning."""

__version__ = "0.1.0"

from .model import (NOOP, Action, Fact, Literal, PlanningTask, apply, execute,
                    plan_cost)
from .planner import SearchBudget, SearchResult, solve_optimal

__all__ = [
    "NOOP", "Action", "Fact", "Literal", "PlanningTask", "apply", "execute",
    "plan_cost", "SearchBudget", "SearchResult", "solve_optimal",
    "__version__",
]

"""Weighted-average-cost evaluation and greedy centroid-directed action choice.

The preventer uses these while the seeker's goal is still ambiguous: rank the
candidate goals by weight, then hill-climb one action at a time towards the
state minimizing the weighted average cost over them. Estimated costs (h_max)
drive the default greedy mode; exact costs and exhaustive centroid search
exist for oracle-grade checks on small tasks.
"""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple

from .model import NOOP, Action, PlanningTask, apply
from .planner import DEFAULT_BUDGET, INF, HMax, SearchBudget, optimal_cost

log = logging.getLogger(__name__)


class CentroidError(Exception):
    pass


@dataclass(frozen=True)
class WeightedGoalSet:
    """Ordered (goal fact-id set, positive weight) pairs; duplicates merged."""

    entries: Tuple[Tuple[frozenset, float], ...]

    @staticmethod
    def build(pairs: Iterable[Tuple[frozenset, float]]) -> "WeightedGoalSet":
        merged: Dict[frozenset, float] = {}
        order: List[frozenset] = []
        for goal, w in pairs:
            if w <= 0:
                raise CentroidError("goal weights must be positive")
            if goal not in merged:
                merged[goal] = 0.0
                order.append(goal)
            merged[goal] += w
        return WeightedGoalSet(tuple((g, merged[g]) for g in order))

    def __len__(self):
        return len(self.entries)


class CostEvaluator:
    """Per-goal cost backend: exact h* searches or h_max estimates."""

    def __init__(self, task: PlanningTask, exact: bool,
                 budget: SearchBudget = DEFAULT_BUDGET):
        self.task = task
        self.exact = exact
        self.budget = budget
        self.h = HMax(task)
        self._cache: Dict[Tuple[frozenset, frozenset], float] = {}

    def cost(self, state: frozenset, goal: frozenset) -> float:
        key = (state, goal)
        got = self._cache.get(key)
        if got is None:
            if self.exact:
                c = optimal_cost(state, goal, self.task, self.budget, self.h)
                got = INF if c is None else float(c)
            else:
                got = float(self.h(state, goal))
            self._cache[key] = got
        return got


def weighted_avg_cost(
    task: PlanningTask,
    state: frozenset,
    goals: WeightedGoalSet,
    exact: bool = False,
    evaluator: Optional[CostEvaluator] = None,
) -> float:
    """(1/|G|) * sum of w_G * c(state, G); unreachable goals are dropped
    from the sum with a warning (the divisor keeps the original |G|)."""
    if not len(goals):
        raise CentroidError("weighted_avg_cost needs at least one goal")
    ev = evaluator or CostEvaluator(task, exact)
    total = 0.0
    reachable = 0
    for goal, w in goals.entries:
        c = ev.cost(state, goal)
        if c == INF:
            log.warning("dropping unreachable goal %s from weighted average",
                        sorted(task.fact_name(g) for g in goal))
            continue
        total += w * c
        reachable += 1
    if reachable == 0:
        raise CentroidError("all goals unreachable from state")
    return total / len(goals)


def get_first_action(
    task: PlanningTask,
    init: frozenset,
    goals: WeightedGoalSet,
    exact: bool = False,
    evaluator: Optional[CostEvaluator] = None,
) -> Optional[Action]:
    """Applicable action (no-op included) minimizing the next-state weighted
    average cost; ties broken by canonical action-name order."""
    ev = evaluator or CostEvaluator(task, exact)
    best: Optional[Tuple[float, str, Action]] = None
    skipped_all = True
    for a in list(task.actions) + [NOOP]:
        if not a.pre <= init:
            continue
        skipped_all = False
        nxt = apply(init, a)
        try:
            score = weighted_avg_cost(task, nxt, goals, exact, ev)
        except CentroidError:
            continue
        key = (score, a.name, a)
        if best is None or key[:2] < best[:2]:
            best = key
    if best is None:
        if skipped_all:
            return None
        raise CentroidError("all goals unreachable from every successor")
    return best[2]


def extract_centroid(
    task: PlanningTask,
    goals: WeightedGoalSet,
    init: Optional[frozenset] = None,
    exhaustive: bool = False,
    exact: Optional[bool] = None,
    max_states: int = 200_000,
) -> frozenset:
    """A reachable state minimizing the weighted average cost to the goals.

    Greedy mode (default) hill-climbs with h_max-estimated costs and returns
    the reached local minimum. Exhaustive mode enumerates every reachable
    state and minimizes exact costs; intended for oracle tests only.
    """
    start = task.init if init is None else frozenset(init)
    if exhaustive:
        ev = CostEvaluator(task, True if exact is None else exact)
        best_state, best_key = None, None
        seen = {start}
        queue = deque([start])
        while queue:
            s = queue.popleft()
            try:
                score = weighted_avg_cost(task, s, goals, ev.exact, ev)
            except CentroidError:
                score = INF
            key = (score, tuple(sorted(task.fact_name(f) for f in s)))
            if best_key is None or key < best_key:
                best_key, best_state = key, s
            for a in task.actions:
                if a.pre <= s:
                    nxt = apply(s, a)
                    if nxt not in seen:
                        if len(seen) >= max_states:
                            raise CentroidError(
                                f"exhaustive centroid search exceeds {max_states} states")
                        seen.add(nxt)
                        queue.append(nxt)
        return best_state

    ev = CostEvaluator(task, False if exact is None else exact)
    current = start
    current_score = weighted_avg_cost(task, current, goals, ev.exact, ev)
    while True:
        a = get_first_action(task, current, goals, ev.exact, ev)
        if a is None or a.name == NOOP.name:
            return current
        nxt = apply(current, a)
        score = weighted_avg_cost(task, nxt, goals, ev.exact, ev)
        if score >= current_score:
            return current
        current, current_score = nxt, score

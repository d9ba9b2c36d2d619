"""Two-agent concurrent execution: interference, joint transitions, episode
re-execution with metrics, a-posteriori counterplan validation, and a small
exhaustive strong-plan checker.

Interfering simultaneous actions leave the state unchanged for BOTH agents -
neither a retry nor a priority rule. This symmetric cancellation shapes
episode outcomes: two agents racing into the same cell both stay put.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .model import NOOP, Action, PlanningTask, apply, plan_cost
from .planner import (DEFAULT_BUDGET, RESOURCE_LIMIT, SOLVED, UNSOLVABLE,
                      HMax, SearchBudget, solve_optimal)


def interferes(a1: Action, a2: Action) -> bool:
    """Mutual non-destruction test: one's deletes touch the other's
    preconditions or adds (symmetric)."""
    if a1.del_ and (a1.del_ & a2.pre or a1.del_ & a2.add):
        return True
    if a2.del_ and (a2.del_ & a1.pre or a2.del_ & a1.add):
        return True
    return False


def joint_apply(s: frozenset, a1: Action, a2: Action) -> frozenset:
    """Joint transition of two simultaneous actions.

    No-ops reduce to the single-agent transition. Interfering pairs cancel
    (state unchanged). Non-interfering pairs fire jointly when both apply;
    otherwise each applicable action fires on its own (absorbing semantics
    per agent).
    """
    noop1 = not (a1.pre or a1.add or a1.del_)
    noop2 = not (a2.pre or a2.add or a2.del_)
    if noop1 and noop2:
        return s
    if noop2:
        return apply(s, a1)
    if noop1:
        return apply(s, a2)
    if interferes(a1, a2):
        return s
    ok1 = a1.pre <= s
    ok2 = a2.pre <= s
    if ok1 and ok2:
        return (s - (a1.del_ | a2.del_)) | a1.add | a2.add
    if ok1:
        return (s - a1.del_) | a1.add
    if ok2:
        return (s - a2.del_) | a2.add
    return s


def joint_execute(s: frozenset, p1: Sequence[Action], p2: Sequence[Action]) -> frozenset:
    """Stepwise joint execution; the longer plan finishes single-agent."""
    n = max(len(p1), len(p2))
    for i in range(n):
        a1 = p1[i] if i < len(p1) else NOOP
        a2 = p2[i] if i < len(p2) else NOOP
        s = joint_apply(s, a1, a2)
    return s


@dataclass
class IterationRecord:
    index: int
    live_goals: List[int]
    cpl_size: int
    cplist_size: int
    prev_action: Optional[str]
    counterplan_found: bool
    seconds: float
    note: str = ""


@dataclass
class EpisodeTrace:
    """Full record of one counterplanning episode."""

    algorithm: str
    anticipatory_prefix: List[Action] = field(default_factory=list)
    counterplan: Optional[List[Action]] = None
    joint_steps: List[Tuple[str, str, frozenset]] = field(default_factory=list)
    stopped: bool = False
    iterations: List[IterationRecord] = field(default_factory=list)
    final_live: List[int] = field(default_factory=list)
    status: str = "ok"  # ok | budget | error

    @property
    def prev_plan(self) -> List[Action]:
        return list(self.anticipatory_prefix) + list(self.counterplan or [])

    def timings(self) -> List[float]:
        return [it.seconds for it in self.iterations]

    def to_jsonl(self) -> str:
        """Line-delimited structured text: header, iterations, summary."""
        lines = [json.dumps({
            "record": "episode", "algorithm": self.algorithm, "status": self.status,
        })]
        for it in self.iterations:
            lines.append(json.dumps({
                "record": "iteration", "index": it.index,
                "live_goals": it.live_goals, "cpl": it.cpl_size,
                "cplist": it.cplist_size, "prev_action": it.prev_action,
                "counterplan_found": it.counterplan_found,
                "seconds": round(it.seconds, 6), "note": it.note,
            }))
        for i, (sa, pa, _) in enumerate(self.joint_steps):
            lines.append(json.dumps({
                "record": "joint-step", "index": i, "seek": sa, "prev": pa,
            }))
        lines.append(json.dumps({
            "record": "summary", "stopped": self.stopped,
            "prefix": [a.name for a in self.anticipatory_prefix],
            "counterplan": [a.name for a in (self.counterplan or [])],
        }))
        return "\n".join(lines) + "\n"


@dataclass
class Metrics:
    """Episode metrics in the evaluation-protocol sense."""

    blocked: float                      # %E: 1.0 if the seeker was stopped
    seek_ratio: Optional[float]         # executed fraction of the seeker plan
    prev_len: Optional[int]             # counterplan cost for the preventer
    anticipatory_ratio: Optional[float]  # cost share generated before the counterplan
    time_avg_s: float
    valid: Optional[bool]               # Def.-6 validity against all live goals
    status: str

    def csv_row(self, task_id: str, algorithm: str) -> str:
        cells = [task_id, algorithm, _fmt(self.blocked), _fmt(self.seek_ratio),
                 _fmt(self.prev_len), _fmt(self.anticipatory_ratio),
                 f"{self.time_avg_s:.4f}", self.status]
        return ",".join(cells)


METRICS_CSV_HEADER = ("task_id,algorithm,E,ratio_seek,len_prev,"
                      "ratio_anticipatory,time_avg_s,status")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.4f}"
    return str(v)


def validate_counterplan(
    seek_task: PlanningTask,
    project,
    composite: frozenset,
    prev_plan_u: Sequence[Action],
    seek_plan_u: Sequence[Action],
    live_goals: Iterable[frozenset],
    budget: SearchBudget = DEFAULT_BUDGET,
) -> Optional[bool]:
    """Def.-6 check: joint-execute both plans, then require every live goal
    unreachable for the seeker from the resulting state.

    ``project`` maps a composite state to the seeker task's universe. Returns
    None (indeterminate) if a reachability search hits its budget.
    """
    final = joint_execute(composite, prev_plan_u, seek_plan_u)
    init = project(final)
    h = HMax(seek_task)
    indeterminate = False
    for goal in live_goals:
        r = solve_optimal(seek_task.with_init_goal(init=init, goal=goal),
                          budget, h)
        if r.status == SOLVED:
            return False
        if r.status == RESOURCE_LIMIT:
            indeterminate = True
    return None if indeterminate else True


def check_strong_small(
    prev_plan: Sequence[Action],
    opponent_actions: Sequence[Action],
    s: frozenset,
    goal: frozenset,
    horizon: int,
    max_branches: int = 200_000,
) -> Optional[bool]:
    """Def.-4 strong-plan test by exhaustive opponent enumeration.

    True iff the joint execution of prev_plan with EVERY opponent action
    sequence of length <= horizon reaches the goal. Opponent options include
    the no-op and inapplicable actions (they may still interfere). Returns
    None when the branch budget is exhausted.
    """
    options = list(opponent_actions) + [NOOP]
    budget = [max_branches]

    def rec(state: frozenset, step: int) -> Optional[bool]:
        if budget[0] <= 0:
            return None
        budget[0] -= 1
        if step >= max(horizon, len(prev_plan)):
            return goal <= state
        mine = prev_plan[step] if step < len(prev_plan) else NOOP
        seen = set()
        for opp in options:
            nxt = joint_apply(state, mine, opp)
            if nxt in seen:
                continue
            seen.add(nxt)
            sub = rec(nxt, step + 1)
            if sub is None:
                return None
            if not sub:
                return False
        return True

    return rec(frozenset(s), 0)


def run_episode(C, seeker_plan, config) -> Tuple[EpisodeTrace, Metrics]:
    """Run an algorithm on a counterplanning task, then score it by jointly
    re-executing the returned plans from the original composite state."""
    from . import counterplanning as cp

    trace = cp.adicp(C, seeker_plan, config)
    seek_u = [C.seek.to_union_action(a) for a in seeker_plan]
    prev_u = [C.prev.to_union_action(a) for a in trace.prev_plan]

    s = C.composite_init
    steps = []
    executed = 0
    blocked_at = None
    n = max(len(seek_u), len(prev_u))
    for i in range(n):
        sa = seek_u[i] if i < len(seek_u) else NOOP
        pa = prev_u[i] if i < len(prev_u) else NOOP
        before = s
        s = joint_apply(s, sa, pa)
        steps.append((sa.name, pa.name, s))
        if i < len(seek_u):
            fired = _seek_fired(before, s, sa, pa)
            if fired and blocked_at is None:
                executed += 1
            elif blocked_at is None:
                blocked_at = i
    trace.joint_steps = steps

    seek_ratio = executed / len(seek_u) if seek_u else None

    live = [C.candidates_seek[i] for i in trace.final_live] if trace.final_live else list(C.candidates_seek)
    valid = validate_counterplan(
        C.seek.task, lambda comp: C.project_seek(comp), C.composite_init,
        prev_u, seek_u, live, config.search_budget)
    if trace.counterplan is None:
        valid = False

    # the seeker counts as stopped only when the counterplan is valid in the
    # Def.-6 sense; an interference accident that merely stalls it is not a stop
    blocked = 1.0 if valid else 0.0
    trace.stopped = bool(valid)

    total_cost = plan_cost(trace.prev_plan)
    prefix_cost = plan_cost(trace.anticipatory_prefix)
    metrics = Metrics(
        blocked=blocked,
        seek_ratio=seek_ratio,
        prev_len=total_cost if trace.counterplan is not None else None,
        anticipatory_ratio=(prefix_cost / total_cost) if total_cost else None,
        time_avg_s=(sum(trace.timings()) / len(trace.timings())) if trace.iterations else 0.0,
        valid=valid,
        status=trace.status,
    )
    return trace, metrics


def _seek_fired(before: frozenset, after: frozenset, sa: Action, pa: Action) -> bool:
    """Did the seeker's action actually take effect in the joint step?"""
    if not (sa.pre or sa.add or sa.del_):
        return True  # no-op trivially "executes"
    if not sa.pre <= before:
        return False
    if not (pa.pre or pa.add or pa.del_):
        return True
    return not interferes(sa, pa)

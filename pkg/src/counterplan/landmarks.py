"""Fact-landmark extraction via delete-relaxation tests.

A fact is reported as a landmark only when a sound relaxed test proves that
every solution plan must make it true (for facts false at init: no relaxed
plan exists once all its achievers are removed) or must rely on it (for facts
true at init: no relaxed plan exists once every action requiring it is
removed). Goal facts are landmarks by definition. The set is sound but not
complete.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Set

from .model import PlanningTask


@dataclass
class FactLandmarkSet:
    landmarks: FrozenSet[int]
    first_achievers: Dict[int, FrozenSet[str]] = field(default_factory=dict)
    task_unsolvable: bool = False

    def __contains__(self, fid: int) -> bool:
        return fid in self.landmarks


def relaxed_solvable(task: PlanningTask, init=None, skip=None) -> bool:
    """Delete-relaxation reachability of the goal, optionally skipping actions."""
    reached = set(task.init if init is None else init)
    if task.goal <= reached:
        return True
    actions = task.actions if skip is None else [a for a in task.actions if a.name not in skip]
    pending = list(actions)
    changed = True
    while changed and pending:
        changed = False
        still = []
        for a in pending:
            if a.pre <= reached:
                new = a.add - reached
                if new:
                    reached |= new
                    changed = True
                if task.goal <= reached:
                    return True
            else:
                still.append(a)
        pending = still
    return task.goal <= reached


def _relaxed_unsolvable_without(task: PlanningTask, init, drop_pred) -> bool:
    reached = set(init)
    pending = [a for a in task.actions if not drop_pred(a)]
    if task.goal <= reached:
        return False
    changed = True
    while changed and pending:
        changed = False
        still = []
        for a in pending:
            if a.pre <= reached:
                new = a.add - reached
                if new:
                    reached |= new
                    changed = True
                if task.goal <= reached:
                    return False
            else:
                still.append(a)
        pending = still
    return not (task.goal <= reached)


def requirable_facts(task: PlanningTask) -> Set[int]:
    """Facts that some action requires or that appear in the goal."""
    out = set(task.goal)
    for a in task.actions:
        out |= a.pre
    return out


def extract_landmarks(
    task: PlanningTask,
    candidates: Optional[Iterable[int]] = None,
    init: Optional[frozenset] = None,
) -> FactLandmarkSet:
    """Sound fact landmarks of the task (optionally from a different init).

    Candidate facts default to everything requirable; passing a subset makes
    this a filtered query with identical per-fact results, since each fact is
    tested independently.
    """
    start = frozenset(task.init if init is None else init)
    work = task.with_init_goal(init=start)
    if not relaxed_solvable(work):
        return FactLandmarkSet(frozenset(work.goal), task_unsolvable=True)

    pool = set(requirable_facts(task)) if candidates is None else set(candidates)
    found: Set[int] = set(task.goal)
    pool -= found

    for fid in pool:
        if fid in start:
            # required-at-some-step test: remove every action needing fid
            if _relaxed_unsolvable_without(work, start, lambda a, f=fid: f in a.pre):
                found.add(fid)
        else:
            # achievement test: remove every achiever of fid
            if _relaxed_unsolvable_without(work, start, lambda a, f=fid: f in a.add):
                found.add(fid)

    achievers: Dict[int, FrozenSet[str]] = {}
    levels = _relaxed_levels(work, start)
    for fid in found:
        if fid in start:
            achievers[fid] = frozenset()
            continue
        lvl = levels.get(fid, float("inf"))
        firsts = set()
        for a in task.actions:
            if fid in a.add and all(levels.get(p, float("inf")) < lvl for p in a.pre):
                firsts.add(a.name)
        achievers[fid] = frozenset(firsts)
    return FactLandmarkSet(frozenset(found), achievers)


def _relaxed_levels(task: PlanningTask, start) -> Dict[int, int]:
    """First relaxed-planning-graph level of each reachable fact."""
    levels = {f: 0 for f in start}
    pending = list(task.actions)
    level = 0
    while True:
        level += 1
        new: Set[int] = set()
        still = []
        for a in pending:
            if all(p in levels for p in a.pre):
                new |= {e for e in a.add if e not in levels}
            else:
                still.append(a)
        if not new:
            break
        for f in new:
            levels[f] = level
        pending = still
    return levels


def dump_landmarks(task: PlanningTask, lms: FactLandmarkSet) -> str:
    """One landmark per line with achiever counts."""
    lines = []
    for fid in sorted(lms.landmarks, key=task.fact_name):
        n = len(lms.first_achievers.get(fid, ()))
        lines.append(f"{task.fact_name(fid)} achievers={n}")
    if lms.task_unsolvable:
        lines.append("; task unsolvable: goal facts only")
    return "\n".join(lines) + "\n"

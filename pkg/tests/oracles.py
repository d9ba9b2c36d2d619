"""Independent brute-force oracles used to verify the engine.

Everything here is deliberately written against the task surface only
(states, actions, goals) with plain graph search, sharing no search code
with the package: uniform-cost search, exhaustive optimal-plan enumeration,
complete-search landmark checks, and a literal Def.-8 counterplanning
landmark oracle.
"""
from __future__ import annotations

import heapq
from itertools import count
from typing import Dict, List, Optional, Set, Tuple

from counterplan.landmarks import extract_landmarks
from counterplan.model import Action, PlanningTask


def ucs_oracle(task: PlanningTask, init=None, goal=None,
               max_states: int = 2_000_000):
    """Uniform-cost search; returns (cost, plan) or (None, None)."""
    start = frozenset(task.init if init is None else init)
    goal = frozenset(task.goal if goal is None else goal)
    if goal <= start:
        return 0, ()
    tie = count()
    heap = [(0, next(tie), start, ())]
    best = {start: 0}
    while heap:
        g, _, s, plan = heapq.heappop(heap)
        if g > best.get(s, float("inf")):
            continue
        if goal <= s:
            return g, plan
        for a in task.actions:
            if a.pre <= s:
                child = (s - a.del_) | a.add
                cg = g + a.cost
                if cg < best.get(child, float("inf")):
                    if len(best) > max_states:
                        raise RuntimeError("ucs oracle exceeded state cap")
                    best[child] = cg
                    heapq.heappush(heap, (cg, next(tie), child, plan + (a,)))
    return None, None


def reachable_states(task: PlanningTask, init=None, cap: int = 200_000) -> Set[frozenset]:
    start = frozenset(task.init if init is None else init)
    seen = {start}
    stack = [start]
    while stack:
        s = stack.pop()
        for a in task.actions:
            if a.pre <= s:
                child = (s - a.del_) | a.add
                if child not in seen:
                    if len(seen) >= cap:
                        raise RuntimeError("reachability cap exceeded")
                    seen.add(child)
                    stack.append(child)
    return seen


def all_optimal_plans_oracle(task: PlanningTask, init=None, goal=None,
                             cap: int = 1_000_000) -> List[Tuple[Action, ...]]:
    """Every cost-optimal plan, by exhaustive DFS with exact cost-to-go
    pruning over the explicitly built reachable state graph."""
    start = frozenset(task.init if init is None else init)
    goal = frozenset(task.goal if goal is None else goal)
    work = task.with_init_goal(init=start, goal=goal)
    cstar, _ = ucs_oracle(work)
    if cstar is None:
        return []

    # explicit graph bounded by cost cstar from the start
    dist: Dict[frozenset, int] = {start: 0}
    edges: Dict[frozenset, List[Tuple[Action, frozenset]]] = {}
    frontier = [(0, 0, start)]
    tie = count()
    while frontier:
        g, _, s = heapq.heappop(frontier)
        if g > dist.get(s, float("inf")) or g >= cstar:
            continue
        for a in task.actions:
            if a.pre <= s:
                child = (s - a.del_) | a.add
                cg = g + a.cost
                if cg > cstar:
                    continue
                edges.setdefault(s, []).append((a, child))
                if cg < dist.get(child, float("inf")):
                    dist[child] = cg
                    heapq.heappush(frontier, (cg, next(tie), child))

    # exact cost-to-go within the bounded graph by backward relaxation
    h: Dict[frozenset, float] = {}
    nodes = set(dist)
    for s in nodes:
        if goal <= s:
            h[s] = 0
    changed = True
    while changed:
        changed = False
        for s in nodes:
            if goal <= s:
                continue
            best = h.get(s, float("inf"))
            for a, child in edges.get(s, ()):  # children within bound
                sub = h.get(child)
                if sub is not None and a.cost + sub < best:
                    best = a.cost + sub
                    changed = True
            if best < h.get(s, float("inf")):
                h[s] = best

    plans: List[Tuple[Action, ...]] = []

    def walk(s, g, plan):
        if len(plans) >= cap:
            raise RuntimeError("plan enumeration cap exceeded")
        if goal <= s and g == cstar:
            plans.append(tuple(plan))
            return
        for a, child in sorted(edges.get(s, ()), key=lambda e: e[0].name):
            sub = h.get(child)
            if sub is None:
                continue
            if g + a.cost + sub == cstar:
                plan.append(a)
                walk(child, g + a.cost, plan)
                plan.pop()

    walk(start, 0, [])
    plans.sort(key=lambda p: tuple(a.name for a in p))
    return plans


def is_landmark_oracle(task: PlanningTask, fact: int, init=None) -> bool:
    """Complete-search landmark test.

    Facts false at init: deleting every achiever must make the task
    unsolvable. Facts true at init: goal facts are landmarks; otherwise
    deleting every action requiring the fact must make it unsolvable.
    """
    start = frozenset(task.init if init is None else init)
    if fact in task.goal:
        return True
    if fact in start:
        pruned = [a for a in task.actions if fact not in a.pre]
    else:
        pruned = [a for a in task.actions if fact not in a.add]
    c, _ = ucs_oracle(task.with_actions(pruned), init=start)
    return c is None


def laststep_oracle(fact: int, plan, goal) -> int:
    last = 0
    for i, a in enumerate(plan, 1):
        if fact in a.pre:
            last = i
    if fact in goal:
        last = max(last, len(plan) + 1)
    return last


def cpl_oracle(C, live, composite=None) -> Set[str]:
    """Literal Def.-8 counterplanning landmarks (by preventer literal name).

    Landmark membership comes from the package extractor (the definition is
    parametric in it); the preventer-falsifiability and the every-optimal-
    plan timing bullets are re-derived here by exhaustive enumeration and
    uniform-cost search. Candidates unreachable for the seeker impose no
    constraint.
    """
    comp = C.composite_init if composite is None else composite
    seek_init = C.project_seek(comp)
    prev_init = C.project_prev(comp)

    per_goal: List[Set[str]] = []
    for idx in live:
        task_i = C.seek.task.with_init_goal(init=seek_init,
                                            goal=C.candidates_seek[idx])
        plans = all_optimal_plans_oracle(task_i)
        if not plans:
            continue  # vacuous candidate: no constraint on the common set
        names: Set[str] = set()
        lms = extract_landmarks(task_i, init=seek_init)
        for fact in lms.landmarks:
            lit = C.seek.task.id_to_literal(fact).negated()
            # preventer must be able to falsify the landmark
            deleters = [a for a in C.prev.task.actions
                        if C.seek.task.fact_name(fact)
                        in {C.prev.task.fact_name(d) for d in a.del_}]
            if not deleters:
                continue
            prev_goal = C.prev.task.literal_id(lit)
            pc, _ = ucs_oracle(C.prev.task, init=prev_init,
                               goal=frozenset({prev_goal}))
            if pc is None:
                continue
            steps = [laststep_oracle(fact, p, task_i.goal) for p in plans]
            if min(steps) == 0:
                continue  # no optimal plan ever needs it: unblockable
            if any(ls < pc for ls in steps):
                continue
            names.add(lit.name)
        per_goal.append(names)
    if not per_goal:
        return set()
    common = set.intersection(*per_goal)
    return common

"""Optimal sequential planning: A* with the h_max heuristic, optimal-cost
queries, enumeration of all optimal plans, and an optimal-plan subgraph used
to reason about every optimal plan at once."""
from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

from .model import Action, PlanningTask, plan_cost

INF = float("inf")

SOLVED = "solved"
UNSOLVABLE = "unsolvable"
RESOURCE_LIMIT = "resource-limit"


@dataclass
class SearchBudget:
    max_nodes: int = 1_000_000
    max_seconds: float = 600.0

    def clock(self) -> float:
        return time.monotonic()


DEFAULT_BUDGET = SearchBudget()


@dataclass
class SearchResult:
    status: str
    plan: Optional[Tuple[Action, ...]] = None
    cost: Optional[int] = None
    expanded: int = 0

    @property
    def solved(self) -> bool:
        return self.status == SOLVED


@dataclass
class PlanSet:
    plans: List[Tuple[Action, ...]]
    cost: Optional[int]
    complete: bool
    expanded: int = 0


class HMax:
    """Delete-relaxation h_max; one instance per task, reusable across states."""

    def __init__(self, task: PlanningTask):
        self.task = task
        self.n_facts = task.n_facts
        self.actions = task.actions
        self.pre_lists = [tuple(a.pre) for a in task.actions]
        self.add_lists = [tuple(a.add) for a in task.actions]
        self.costs = [a.cost for a in task.actions]
        self.requirers: List[List[int]] = [[] for _ in range(task.n_facts)]
        self.no_pre = []
        for ai, pre in enumerate(self.pre_lists):
            if not pre:
                self.no_pre.append(ai)
            for f in pre:
                self.requirers[f].append(ai)

    def __call__(self, state: frozenset, goal: frozenset) -> float:
        if goal <= state:
            return 0
        fact_cost = [INF] * self.n_facts
        remaining = [len(p) for p in self.pre_lists]
        heap = []
        for f in state:
            fact_cost[f] = 0
            heap.append((0, f))
        heapq.heapify(heap)
        goal_left = sum(1 for g in goal if g not in state)
        goal_max = 0

        def fire(ai: int, trigger_cost: int):
            nonlocal goal_left, goal_max
            c = trigger_cost + self.costs[ai]
            for e in self.add_lists[ai]:
                if c < fact_cost[e]:
                    fact_cost[e] = c
                    heapq.heappush(heap, (c, e))

        for ai in self.no_pre:
            fire(ai, 0)
        while heap and goal_left:
            c, f = heapq.heappop(heap)
            if c > fact_cost[f]:
                continue
            if f in goal:
                goal_left -= 1
                if c > goal_max:
                    goal_max = c
                if not goal_left:
                    return goal_max
            for ai in self.requirers[f]:
                remaining[ai] -= 1
                if remaining[ai] == 0:
                    # h_max: trigger cost is the max precondition cost, which
                    # is this fact's cost because pops are cost-ordered.
                    fire(ai, c)
        return goal_max if not goal_left else INF


def _reconstruct(parents, sid):
    steps = []
    while sid is not None:
        prev, act = parents[sid]
        if act is not None:
            steps.append(act)
        sid = prev
    steps.reverse()
    return tuple(steps)


def solve_optimal(
    task: PlanningTask,
    budget: Optional[SearchBudget] = None,
    heuristic: Optional[HMax] = None,
) -> SearchResult:
    """A* with h_max; deterministic under the canonical action order.

    Ties in f are broken by smaller h, then by insertion order, which follows
    the lexicographic action ordering of the task tables.
    """
    budget = budget or DEFAULT_BUDGET
    h = heuristic or HMax(task)
    goal = task.goal
    init = task.init
    h0 = h(init, goal)
    if h0 == INF:
        return SearchResult(UNSOLVABLE, expanded=0)

    states: List[frozenset] = [init]
    index: Dict[frozenset, int] = {init: 0}
    g = {0: 0}
    parents = {0: (None, None)}
    closed = set()
    tie = 0
    open_heap = [(h0, h0, 0, 0)]
    expanded = 0
    deadline = time.monotonic() + budget.max_seconds
    actions = task.actions

    while open_heap:
        f, _, _, sid = heapq.heappop(open_heap)
        if sid in closed:
            continue
        state = states[sid]
        gs = g[sid]
        if goal <= state:
            return SearchResult(SOLVED, _reconstruct(parents, sid), gs, expanded)
        closed.add(sid)
        expanded += 1
        if expanded > budget.max_nodes or time.monotonic() > deadline:
            return SearchResult(RESOURCE_LIMIT, expanded=expanded)
        for a in actions:
            if not a.pre <= state:
                continue
            child = (state - a.del_) | a.add
            cg = gs + a.cost
            cid = index.get(child)
            if cid is None:
                cid = len(states)
                index[child] = cid
                states.append(child)
            elif cid in closed or g.get(cid, INF) <= cg:
                continue
            ch = h(child, goal)
            if ch == INF:
                continue
            g[cid] = cg
            parents[cid] = (sid, a)
            tie += 1
            heapq.heappush(open_heap, (cg + ch, ch, tie, cid))
    return SearchResult(UNSOLVABLE, expanded=expanded)


def optimal_cost(
    init: frozenset,
    goal: frozenset,
    task: PlanningTask,
    budget: Optional[SearchBudget] = None,
    heuristic: Optional[HMax] = None,
) -> Optional[int]:
    """h*: optimal cost from init to goal over the task's actions, or None."""
    r = solve_optimal(task.with_init_goal(init=init, goal=goal), budget, heuristic)
    if r.status == SOLVED:
        return r.cost
    if r.status == UNSOLVABLE:
        return None
    raise BudgetExceeded("optimal_cost search exceeded its budget")


class BudgetExceeded(Exception):
    pass


def enumerate_optimal_plans(
    task: PlanningTask,
    cap: int = 10_000,
    budget: Optional[SearchBudget] = None,
    heuristic: Optional[HMax] = None,
) -> PlanSet:
    """All cost-optimal plans via DFS pruned with g + h_max > C*.

    Requires positive action costs (optimal plans are then acyclic). Results
    are ordered lexicographically by action-name sequence. complete=False
    means the cap or budget was hit.
    """
    budget = budget or DEFAULT_BUDGET
    h = heuristic or HMax(task)
    first = solve_optimal(task, budget, h)
    if first.status == UNSOLVABLE:
        return PlanSet([], None, True, first.expanded)
    if first.status == RESOURCE_LIMIT:
        return PlanSet([], None, False, first.expanded)
    cstar = first.cost

    for a in task.actions:
        if a.cost <= 0:
            raise ValueError(
                "enumerate_optimal_plans requires positive action costs")

    plans: List[Tuple[Action, ...]] = []
    complete = True
    expanded = 0
    deadline = time.monotonic() + budget.max_seconds
    actions = task.actions
    goal = task.goal

    def dfs(state, gcost, path, on_path):
        nonlocal complete, expanded
        if len(plans) >= cap or time.monotonic() > deadline:
            complete = False
            return
        if goal <= state and gcost == cstar:
            plans.append(tuple(path))
            return
        expanded += 1
        if expanded > budget.max_nodes:
            complete = False
            return
        for a in actions:
            if gcost + a.cost > cstar or not a.pre <= state:
                continue
            child = (state - a.del_) | a.add
            if child in on_path:
                continue
            if gcost + a.cost + h(child, goal) > cstar:
                continue
            on_path.add(child)
            path.append(a)
            dfs(child, gcost + a.cost, path, on_path)
            path.pop()
            on_path.discard(child)
            if not complete and len(plans) >= cap:
                return

    dfs(task.init, 0, [], {task.init})
    plans.sort(key=lambda p: tuple(a.name for a in p))
    return PlanSet(plans, cstar, complete, expanded)


# ---------------------------------------------------------------------------
# Optimal-plan subgraph: every state/edge on some optimal plan
# ---------------------------------------------------------------------------

@dataclass
class OptimalSubgraph:
    """All states and transitions that lie on at least one optimal plan."""

    cstar: int
    states: List[frozenset]
    gstar: List[int]
    hstar: List[float]
    edges: List[Tuple[int, Action, int]]  # only edges on optimal plans
    init_id: int
    complete: bool

    def _suffix_order(self):
        """States by descending g* with outgoing DAG edges (reverse topological)."""
        order = sorted(range(len(self.states)), key=lambda i: -self.gstar[i])
        out: Dict[int, List[Tuple[Action, int]]] = {}
        for u, a, v in self.edges:
            out.setdefault(u, []).append((a, v))
        return order, out

    def min_plan_length(self) -> int:
        order, out = self._suffix_order()
        best = [INF] * len(self.states)
        for i in order:
            if self.hstar[i] == 0:
                best[i] = 0
            for a, v in out.get(i, ()):  # children have larger g*, already done
                if best[v] + 1 < best[i]:
                    best[i] = best[v] + 1
        return int(best[self.init_id])

    def min_laststep(self, fact: int, goal: frozenset = frozenset()) -> int:
        """min over optimal plans of the last 1-based step requiring ``fact``.

        Goal facts count one past the end of the (shortest) plan; 0 when no
        optimal plan ever requires the fact.
        """
        return self.min_laststeps([fact], goal)[fact]

    def min_laststeps(self, facts: Iterable[int],
                      goal: frozenset = frozenset()) -> Dict[int, int]:
        """min_laststep for several facts in one sweep over the subgraph.

        For each fact the suffix value r(s) is the minimum over optimal
        continuations from s of the last relative step requiring the fact
        (0 if never). r((a) + suffix) is suffix_r + 1 when the suffix still
        needs the fact, else 1 if a itself does, else 0 - minimizing over a
        monotone function, so the DP over the DAG is exact. For facts in
        ``goal`` every plan needs them at its end, so the value is the
        minimal optimal-plan length plus one.
        """
        order, out = self._suffix_order()
        n = len(self.states)
        result: Dict[int, int] = {}
        goal_value: Optional[int] = None
        for fact in facts:
            if fact in goal:
                if goal_value is None:
                    goal_value = self.min_plan_length() + 1
                result[fact] = goal_value
                continue
            r = [INF] * n
            for i in order:
                if self.hstar[i] == 0:
                    r[i] = 0
                for a, v in out.get(i, ()):
                    rv = r[v]
                    cand = rv + 1 if rv > 0 else (1 if fact in a.pre else 0)
                    if cand < r[i]:
                        r[i] = cand
            result[fact] = int(r[self.init_id])
        return result


def optimal_subgraph(
    task: PlanningTask,
    budget: Optional[SearchBudget] = None,
    heuristic: Optional[HMax] = None,
) -> Optional[OptimalSubgraph]:
    """Build the optimal-plan subgraph, or None when the task is unsolvable.

    Explores every state with g* + h_max <= C* (Dijkstra order), computes
    exact h* within that subgraph by backward relaxation from goal states,
    and keeps edges with g*(u) + cost + h*(v) == C*. Every optimal plan is a
    path of kept edges and vice versa. complete=False (budget hit) means the
    edge set may be missing optimal plans.
    """
    budget = budget or DEFAULT_BUDGET
    h = heuristic or HMax(task)
    first = solve_optimal(task, budget, h)
    if first.status == UNSOLVABLE:
        return None
    if first.status == RESOURCE_LIMIT:
        raise BudgetExceeded("optimal_subgraph: initial search exceeded budget")
    cstar = first.cost
    goal = task.goal
    actions = task.actions

    states: List[frozenset] = [task.init]
    index: Dict[frozenset, int] = {task.init: 0}
    gstar: List[int] = [0]
    all_edges: List[Tuple[int, Action, int]] = []
    heap = [(0, 0)]
    done = set()
    complete = True
    deadline = time.monotonic() + budget.max_seconds
    expanded = 0

    while heap:
        gc, sid = heapq.heappop(heap)
        if sid in done or gc > gstar[sid]:
            continue
        done.add(sid)
        state = states[sid]
        if goal <= state:
            continue  # optimal plans end at the first goal state
        expanded += 1
        if expanded > budget.max_nodes or time.monotonic() > deadline:
            complete = False
            break
        for a in actions:
            cg = gc + a.cost
            if cg > cstar or not a.pre <= state:
                continue
            child = (state - a.del_) | a.add
            cid = index.get(child)
            if cid is None:
                if cg + h(child, goal) > cstar:
                    continue
                cid = len(states)
                index[child] = cid
                states.append(child)
                gstar.append(cg)
                heapq.heappush(heap, (cg, cid))
            else:
                if cg < gstar[cid]:
                    gstar[cid] = cg
                    heapq.heappush(heap, (cg, cid))
            all_edges.append((sid, a, cid))

    # exact h* inside the explored subgraph (all optimal plans stay within)
    n = len(states)
    hstar = [INF] * n
    rev: Dict[int, List[Tuple[int, int]]] = {}
    for u, a, v in all_edges:
        rev.setdefault(v, []).append((u, a.cost))
    hheap = []
    for i, s in enumerate(states):
        if goal <= s:
            hstar[i] = 0
            hheap.append((0, i))
    heapq.heapify(hheap)
    hdone = set()
    while hheap:
        hc, sid = heapq.heappop(hheap)
        if sid in hdone:
            continue
        hdone.add(sid)
        for u, c in rev.get(sid, ()):
            if hc + c < hstar[u]:
                hstar[u] = hc + c
                heapq.heappush(hheap, (hc + c, u))

    edges = [
        (u, a, v)
        for (u, a, v) in all_edges
        if gstar[u] + a.cost == gstar[v] and gstar[u] + a.cost + hstar[v] == cstar
    ]
    return OptimalSubgraph(cstar, states, gstar, hstar, edges, 0, complete)

"""Plan-based probabilistic goal recognition over observed action sequences.

Costs c(G|O) and c(G|not-O) come from a compiled task with a forced
subsequence monitor: executing the i-th observed action while the monitor is
at stage i-1 always advances it (the unmonitored variant is disabled at that
stage through the negation facts), so a plan reaches the final stage exactly
when the observations embed into it, in order. Complying and non-complying
costs then differ only in the goal: final stage required vs. forbidden.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from .model import Action, Literal, PlanningTask, build_task
from .planner import DEFAULT_BUDGET, HMax, SearchBudget, solve_optimal

TIE_EPS = 1e-6


class RecognitionError(Exception):
    pass


@dataclass
class ObservationSequence:
    actions: Tuple[Action, ...] = ()

    def __len__(self):
        return len(self.actions)

    def names(self) -> List[str]:
        return [a.name for a in self.actions]


@dataclass
class RecognitionProblem:
    task: PlanningTask                      # seeker facts/actions/init (goal ignored)
    candidates: List[frozenset]             # goal fact-id sets
    observations: ObservationSequence
    prior: Optional[List[float]] = None     # defaults to uniform

    def priors(self) -> List[float]:
        if self.prior is None:
            n = len(self.candidates)
            return [1.0 / n] * n
        if len(self.prior) != len(self.candidates):
            raise RecognitionError("prior length must match candidates")
        total = sum(self.prior)
        if not math.isclose(total, 1.0, rel_tol=1e-9):
            raise RecognitionError("prior must sum to 1")
        return list(self.prior)


@dataclass
class GoalCosts:
    goal_index: int
    comply: Optional[int]
    not_comply: Optional[int]

    @property
    def delta(self) -> Optional[float]:
        if self.comply is None:
            return None
        if self.not_comply is None:
            return -math.inf
        return self.comply - self.not_comply


@dataclass
class RecognitionResult:
    posterior: List[float]
    most_probable: List[int]
    costs: List[GoalCosts]

    def csv_rows(self) -> List[str]:
        """Diagnostic rows: goal id, c(G|O), c(G|notO), delta, posterior."""
        rows = []
        for c in self.costs:
            d = c.delta
            rows.append(
                f"{c.goal_index},{_n(c.comply)},{_n(c.not_comply)},"
                f"{_n(d)},{self.posterior[c.goal_index]:.6f}")
        return rows


def _n(v) -> str:
    return "" if v is None else str(v)


def _stage_name(k: int) -> str:
    return f"(observed-up-to i{k})"


class ObservationCompiler:
    """Monitor compilation shared across candidate goals for one O."""

    def __init__(self, task: PlanningTask, obs: ObservationSequence):
        self.task = task
        self.obs = obs
        self.m = len(obs)
        stages = [_stage_name(k) for k in range(self.m + 1)]
        self.stages = stages

        idx_of: Dict[str, List[int]] = {}
        for i, a in enumerate(obs.actions, start=1):
            if a.name not in task.action_by_name:
                raise RecognitionError(f"observed action not in task: {a.name}")
            idx_of.setdefault(a.name, []).append(i)

        base_names = [f.name for f in task.facts if not f.name.startswith("(not ")]
        fact_names = base_names + stages

        def atoms_of(ids) -> List[str]:
            return [task.id_to_literal(f).atom
                    for f in ids if task.id_to_literal(f).positive]

        specs = []
        for a in task.actions:
            pre = [task.id_to_literal(p) for p in a.pre]
            add = atoms_of(a.add)
            dele = atoms_of(a.del_)
            hits = idx_of.get(a.name, [])
            if not hits:
                specs.append((a.name, pre, add, dele, a.cost))
                continue
            for i in hits:
                specs.append((
                    f"(track{i} {a.name})",
                    pre + [Literal(stages[i - 1], True)],
                    add + [stages[i]],
                    dele + [stages[i - 1]],
                    a.cost,
                ))
            off_pre = pre + [Literal(stages[i - 1], False) for i in hits]
            specs.append((f"(off {a.name})", off_pre, add, dele, a.cost))

        init_atoms = atoms_of(task.init) + [stages[0]]
        self.compiled = build_task(fact_names, specs, init_atoms, [],
                                   name=f"{task.name}|obs{self.m}")
        self.heuristic = HMax(self.compiled)

    def goal_ids(self, goal: frozenset, comply: bool) -> frozenset:
        c = self.compiled
        ids = {c.literal_id(self.task.id_to_literal(g)) for g in goal}
        ids.add(c.literal_id(Literal(self.stages[self.m], comply)))
        return frozenset(ids)

    def cost(self, goal: frozenset, comply: bool,
             budget: SearchBudget = DEFAULT_BUDGET) -> Optional[int]:
        t = self.compiled.with_init_goal(goal=self.goal_ids(goal, comply))
        r = solve_optimal(t, budget, self.heuristic)
        return r.cost if r.solved else None


def compile_observations(
    task: PlanningTask,
    obs: ObservationSequence,
    comply: bool,
) -> PlanningTask:
    """Compiled task whose optimal cost is c(G|O) (comply) or c(G|not-O).

    Monitor facts observed-up-to-0..m are threaded through copies of the
    observed actions; every action equal to some o_i is split so that at
    stage i-1 only the advancing copy applies. Plans of the compiled task are
    in cost-preserving bijection with original plans, and the final monitor
    stage is reached iff the observations embed as an ordered subsequence.
    """
    comp = ObservationCompiler(task, obs)
    return comp.compiled.with_init_goal(goal=comp.goal_ids(task.goal, comply))


def goal_costs_for(
    problem: RecognitionProblem,
    budget: SearchBudget = DEFAULT_BUDGET,
) -> List[GoalCosts]:
    task, obs = problem.task, problem.observations
    out = []
    if len(obs) == 0:
        h = HMax(task)
        for i, g in enumerate(problem.candidates):
            r = solve_optimal(task.with_init_goal(goal=g), budget, h)
            c = r.cost if r.solved else None
            out.append(GoalCosts(i, c, c))
        return out
    comp = ObservationCompiler(task, obs)
    for i, g in enumerate(problem.candidates):
        out.append(GoalCosts(i, comp.cost(g, True, budget),
                             comp.cost(g, False, budget)))
    return out


def recognize(
    problem: RecognitionProblem,
    beta: float = 1.0,
    budget: SearchBudget = DEFAULT_BUDGET,
) -> RecognitionResult:
    """Posterior over candidate goals given the observations.

    P(O|G) = sigmoid(-beta * delta(G)) with delta = c(G|O) - c(G|not-O);
    candidates whose comply cost is undefined get posterior 0. With no
    observations every solvable candidate is equally consistent (delta 0).
    """
    if beta <= 0:
        raise RecognitionError("beta must be positive")
    priors = problem.priors()
    costs = goal_costs_for(problem, budget)
    weights = []
    for c, p in zip(costs, priors):
        if c.comply is None:
            weights.append(0.0)
            continue
        d = c.delta
        like = 1.0 if d == -math.inf else 1.0 / (1.0 + math.exp(beta * d))
        weights.append(p * like)
    total = sum(weights)
    if total <= 0:
        raise RecognitionError("no consistent goal")
    posterior = [w / total for w in weights]
    best = max(posterior)
    most = [i for i, p in enumerate(posterior) if best - p <= TIE_EPS]
    return RecognitionResult(posterior, most, costs)

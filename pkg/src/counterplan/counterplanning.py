"""Counterplanning landmarks, goal selection, ranking, and the reactive /
anticipatory algorithm family.

The two agents are grounded separately from one shared domain file and are
coupled by fact-name identity: the composite state lives in a union universe
and is projected into each agent's own fact table on demand. A landmark entry
survives only if (i) it is a fact landmark of every live candidate task,
(ii) some preventer action falsifies it, and (iii) no optimal seeker plan
stops needing it before the preventer can impose its negation.
"""
from __future__ import annotations

import logging
import random
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from . import pddl
from .centroids import CentroidError, WeightedGoalSet, get_first_action
from .landmarks import extract_landmarks
from .model import (NOOP, Action, Literal, PlanningTask, apply, build_task,
                    close_world)
from .planner import (DEFAULT_BUDGET, RESOURCE_LIMIT, SOLVED, UNSOLVABLE,
                      BudgetExceeded, HMax, SearchBudget, enumerate_optimal_plans,
                      optimal_subgraph, solve_optimal)
from .recognition import (ObservationSequence, RecognitionError,
                          RecognitionProblem, recognize)
from .simulator import EpisodeTrace, IterationRecord, joint_apply

log = logging.getLogger(__name__)

MODES = ("dicp", "adicp", "random-adicp", "random-goal-adicp")
STRATEGIES = ("closest-to-prev", "closest-to-seek")


class CounterplanningError(Exception):
    pass


@dataclass
class AgentFrame:
    """One agent's grounded task plus its embedding into the union universe."""

    task: PlanningTask
    to_union_fact: Dict[int, int]
    from_union_base: Dict[int, int]
    union_actions: Dict[str, Action]
    heuristic: HMax = None

    def __post_init__(self):
        if self.heuristic is None:
            self.heuristic = HMax(self.task)

    def to_union_action(self, a: Action) -> Action:
        if not (a.pre or a.add or a.del_):
            return NOOP
        return self.union_actions[a.name]

    def project(self, composite: frozenset) -> frozenset:
        base_true = {self.from_union_base[u] for u in composite
                     if u in self.from_union_base}
        return close_world(self.task, base_true)


@dataclass
class CounterplanningTask:
    seek: AgentFrame
    prev: AgentFrame
    union: PlanningTask                  # action-less union universe
    composite_init: frozenset
    candidate_literals: List[List[Literal]]
    candidates_seek: List[frozenset]     # goal id sets in the seeker universe
    true_goal_index: Optional[int] = None
    observations: Tuple[Action, ...] = ()
    pool_seek: frozenset = frozenset()   # preventer-falsifiable seeker facts

    @property
    def true_goal_u(self) -> frozenset:
        if self.true_goal_index is None:
            return frozenset()
        return self.union.literals_to_ids(
            self.candidate_literals[self.true_goal_index])

    def project_seek(self, composite: frozenset) -> frozenset:
        return self.seek.project(composite)

    def project_prev(self, composite: frozenset) -> frozenset:
        return self.prev.project(composite)

    def seeker_task_for(self, index: int, composite=None) -> PlanningTask:
        init = None if composite is None else self.project_seek(composite)
        t = self.seek.task.with_init_goal(goal=self.candidates_seek[index])
        return t if init is None else t.with_init_goal(init=init)


def _base_names(task: PlanningTask) -> List[str]:
    return [f.name for f in task.facts if not f.name.startswith("(not ")]


def _base_true(task: PlanningTask, state: frozenset) -> set:
    return {task.fact_name(f) for f in state
            if not task.fact_name(f).startswith("(not ")}


def build_counterplanning_task(
    domain_text: str,
    seek_problem_text: str,
    prev_problem_text: str,
    candidate_conditions: Sequence[Sequence[Literal]],
    true_goal_index: Optional[int] = None,
) -> CounterplanningTask:
    """Ground both agents from one domain and couple them by fact names."""
    seek_task = pddl.ground(pddl.load_task(domain_text, seek_problem_text), name="seek")
    prev_task = pddl.ground(pddl.load_task(domain_text, prev_problem_text), name="prev")
    return couple_tasks(seek_task, prev_task, candidate_conditions, true_goal_index)


def couple_tasks(
    seek_task: PlanningTask,
    prev_task: PlanningTask,
    candidate_conditions: Sequence[Sequence[Literal]],
    true_goal_index: Optional[int] = None,
) -> CounterplanningTask:
    union_base = sorted(set(_base_names(seek_task)) | set(_base_names(prev_task)))
    union_init = _base_true(seek_task, seek_task.init) | _base_true(prev_task, prev_task.init)
    union = build_task(union_base, [], union_init, [], name="union")

    frames = []
    for t in (seek_task, prev_task):
        to_u = {f.id: union.fact_id(f.name) for f in t.facts}
        from_u = {}
        for f in t.facts:
            if not f.name.startswith("(not "):
                from_u[union.fact_id(f.name)] = f.id
        ua = {}
        for a in t.actions:
            ua[a.name] = Action(
                a.name,
                frozenset(to_u[p] for p in a.pre),
                frozenset(to_u[p] for p in a.add),
                frozenset(to_u[p] for p in a.del_),
                a.cost,
            )
        frames.append(AgentFrame(t, to_u, from_u, ua))
    seek_frame, prev_frame = frames

    candidates_seek = [seek_task.literals_to_ids(c) for c in candidate_conditions]

    # facts the preventer can falsify: seeker facts deleted (by name) by some
    # preventer action; in the paired-negation encoding this covers both
    # polarities of the second Def.-8 condition
    prev_del_names = set()
    for a in prev_task.actions:
        prev_del_names.update(prev_task.fact_name(d) for d in a.del_)
    pool = frozenset(
        f.id for f in seek_task.facts if f.name in prev_del_names
    )

    return CounterplanningTask(
        seek=seek_frame,
        prev=prev_frame,
        union=union,
        composite_init=union.init,
        candidate_literals=[list(c) for c in candidate_conditions],
        candidates_seek=candidates_seek,
        true_goal_index=true_goal_index,
        pool_seek=pool,
    )


def potential_tasks(C: CounterplanningTask, live: Sequence[int],
                    composite: Optional[frozenset] = None) -> List[PlanningTask]:
    """One seeker task per live candidate goal, sharing facts/actions/init."""
    comp = C.composite_init if composite is None else composite
    return [C.seeker_task_for(i, comp) for i in live]


def laststep(fact: int, plan: Sequence[Action], goal: frozenset) -> int:
    """Last 1-based step whose precondition needs the fact; goal facts count
    past the final step; 0 when never required."""
    last = 0
    for i, a in enumerate(plan, 1):
        if fact in a.pre:
            last = i
    if fact in goal:
        last = max(last, len(plan) + 1)
    return last


# ---------------------------------------------------------------------------
# Counterplanning landmarks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CPLEntry:
    """A seeker landmark with the polarity the preventer must impose."""

    literal: Literal        # preventer goal, e.g. (not (free c3-2))
    seek_fact: int          # seeker-universe id of the fact the seeker needs
    prev_goal: int          # preventer-universe id of the imposed literal
    prev_cost: int
    min_laststep: int
    unverified: bool = False


@dataclass
class CPList:
    """Individual counterplanning landmarks per candidate goal."""

    per_goal: Dict[int, List[CPLEntry]] = field(default_factory=dict)

    def flattened(self) -> List[CPLEntry]:
        out = []
        for idx in sorted(self.per_goal):
            out.extend(self.per_goal[idx])
        return out

    def size(self) -> int:
        return sum(len(v) for v in self.per_goal.values())

    def distinct_literals(self) -> List[Literal]:
        seen = []
        for e in self.flattened():
            if e.literal not in seen:
                seen.append(e.literal)
        return seen

    def multiplicity(self, literal: Literal) -> int:
        return sum(1 for e in self.flattened() if e.literal == literal)


@dataclass
class CPConfig:
    search_budget: SearchBudget = field(default_factory=SearchBudget)
    subgraph_budget: SearchBudget = field(default_factory=lambda: SearchBudget(200_000, 600.0))
    enum_cap: int = 10_000
    beta: float = 1.0
    prior: Optional[List[float]] = None


def _per_goal_landmark_steps(C, live, seek_init, config):
    """Per live goal: {seeker fact: min last step}, completeness flags, and
    the candidates that are unsolvable from the current state (vacuous)."""
    out: Dict[int, Dict[int, int]] = {}
    flags: Dict[int, bool] = {}
    vacuous: set = set()
    for idx in live:
        task_i = C.seek.task.with_init_goal(init=seek_init,
                                            goal=C.candidates_seek[idx])
        try:
            sub = optimal_subgraph(task_i, config.subgraph_budget, C.seek.heuristic)
        except BudgetExceeded:
            log.warning("subgraph budget exhausted for candidate %d", idx)
            out[idx] = {}
            flags[idx] = False
            continue
        if sub is None:
            # already unreachable for the seeker: no landmark constraint
            out[idx] = {}
            flags[idx] = True
            vacuous.add(idx)
            continue
        lms = extract_landmarks(task_i, candidates=C.pool_seek, init=seek_init)
        wanted = [f for f in lms.landmarks if f in C.pool_seek]
        steps = sub.min_laststeps(wanted, task_i.goal)
        res: Dict[int, int] = {}
        for f in wanted:
            ls = steps[f]
            if ls > 0:  # facts no optimal plan ever needs cannot be blocked
                res[f] = ls
        out[idx] = res
        flags[idx] = sub.complete
    return out, flags, vacuous


def _prev_cost_within(C, prev_init, goal_fid, bound, config):
    """Preventer cost to impose a fact, or None if above the bound."""
    task = C.prev.task.with_init_goal(init=prev_init, goal=frozenset({goal_fid}))
    budget = config.search_budget
    r = solve_optimal(task, budget, C.prev.heuristic)
    if r.status == SOLVED and r.cost <= bound:
        return r.cost
    if r.status == RESOURCE_LIMIT:
        raise BudgetExceeded("preventer cost search exceeded budget")
    return None


@dataclass
class CPLExtraction:
    common: List[CPLEntry]
    cplist: CPList
    vacuous: List[int]          # live candidates already unreachable

    def all_live_vacuous(self, live: Sequence[int]) -> bool:
        return bool(live) and set(live) <= set(self.vacuous)


def extract_cpl_full(
    C: CounterplanningTask,
    live: Sequence[int],
    composite: Optional[frozenset] = None,
    config: Optional[CPConfig] = None,
) -> CPLExtraction:
    """Common counterplanning landmarks and the per-goal CPList.

    Both are computed in one pass: per-goal landmark/last-step maps first,
    then one bounded preventer search per distinct landmark. Candidates that
    are already unreachable from the composite state impose no landmark
    constraint: they drop out of the common intersection (vacuously
    satisfied) and contribute nothing to the CPList.
    """
    config = config or CPConfig()
    comp = C.composite_init if composite is None else composite
    seek_init = C.project_seek(comp)
    prev_init = C.project_prev(comp)

    steps_by_goal, complete_by_goal, vacuous = _per_goal_landmark_steps(
        C, live, seek_init, config)

    # distinct landmark facts and the loosest bound any goal allows them
    bounds: Dict[int, int] = {}
    for idx in live:
        for f, ls in steps_by_goal[idx].items():
            bounds[f] = max(bounds.get(f, 0), ls)

    costs: Dict[int, Optional[int]] = {}
    unverified_fact: Dict[int, bool] = {}
    for f in sorted(bounds):
        seek_lit = C.seek.task.id_to_literal(f)
        imposed = seek_lit.negated()
        try:
            prev_goal = C.prev.task.literal_id(imposed)
        except Exception:
            costs[f] = None
            continue
        try:
            costs[f] = _prev_cost_within(C, prev_init, prev_goal, bounds[f], config)
            unverified_fact[f] = False
        except BudgetExceeded:
            costs[f] = None
            unverified_fact[f] = True

    cplist = CPList()
    for idx in live:
        entries = []
        for f, ls in sorted(steps_by_goal[idx].items()):
            c = costs.get(f)
            if c is None or c > ls:
                continue
            seek_lit = C.seek.task.id_to_literal(f)
            imposed = seek_lit.negated()
            entries.append(CPLEntry(
                literal=imposed,
                seek_fact=f,
                prev_goal=C.prev.task.literal_id(imposed),
                prev_cost=c,
                min_laststep=ls,
                unverified=not complete_by_goal.get(idx, True),
            ))
        entries.sort(key=lambda e: e.literal.name)
        cplist.per_goal[idx] = entries

    common: List[CPLEntry] = []
    binding = [idx for idx in live if idx not in vacuous]
    if binding:
        first = cplist.per_goal.get(binding[0], [])
        for e in first:
            others = []
            ok = True
            for idx in binding[1:]:
                match = [x for x in cplist.per_goal.get(idx, [])
                         if x.literal == e.literal]
                if not match:
                    ok = False
                    break
                others.append(match[0])
            if ok:
                ml = min([e.min_laststep] + [x.min_laststep for x in others])
                common.append(CPLEntry(
                    literal=e.literal, seek_fact=e.seek_fact,
                    prev_goal=e.prev_goal, prev_cost=e.prev_cost,
                    min_laststep=ml,
                    unverified=e.unverified or any(x.unverified for x in others),
                ))
    common.sort(key=lambda e: e.literal.name)
    return CPLExtraction(common, cplist, sorted(vacuous))


def extract_cpl_bundle(C, live, composite=None, config=None):
    ext = extract_cpl_full(C, live, composite, config)
    return ext.common, ext.cplist


def extract_cpl(C, live, composite=None, config=None) -> List[CPLEntry]:
    """Counterplanning landmarks common to every live candidate task."""
    return extract_cpl_full(C, live, composite, config).common


def extract_list_of_cpl(C, live, composite=None, config=None) -> CPList:
    """Individual counterplanning landmarks of each live candidate task."""
    return extract_cpl_full(C, live, composite, config).cplist


def rank(cplist: CPList) -> WeightedGoalSet:
    """Weight each distinct landmark by its share of the flattened CPList."""
    flat = cplist.flattened()
    if not flat:
        raise CounterplanningError("rank on an empty CPList")
    total = len(flat)
    pairs = []
    for lit in sorted(cplist.distinct_literals(), key=lambda l: l.name):
        count = cplist.multiplicity(lit)
        entry = next(e for e in flat if e.literal == lit)
        pairs.append((frozenset({entry.prev_goal}), count / total))
    return WeightedGoalSet.build(pairs)


def select_goal(entries: Sequence[CPLEntry], strategy: str) -> CPLEntry:
    """closest-to-prev: cheapest for the preventer; closest-to-seek: stops
    the seeker soonest (smallest surviving last step)."""
    if not entries:
        raise CounterplanningError("select_goal on an empty CPL")
    if strategy == "closest-to-prev":
        return min(entries, key=lambda e: (e.prev_cost, e.literal.name))
    if strategy == "closest-to-seek":
        return min(entries, key=lambda e: (e.min_laststep, e.literal.name))
    raise CounterplanningError(f"unknown strategy: {strategy}")


# ---------------------------------------------------------------------------
# Anticipation and the algorithm family
# ---------------------------------------------------------------------------

@dataclass
class AlgorithmConfig:
    mode: str = "adicp"
    strategy: str = "closest-to-seek"
    seed: int = 0
    beta: float = 1.0
    prior: Optional[List[float]] = None
    search_budget: SearchBudget = field(default_factory=SearchBudget)
    subgraph_budget: SearchBudget = field(default_factory=lambda: SearchBudget(200_000, 600.0))

    def __post_init__(self):
        if self.mode not in MODES:
            raise CounterplanningError(f"unknown mode: {self.mode}")
        if self.strategy not in STRATEGIES:
            raise CounterplanningError(f"unknown strategy: {self.strategy}")

    def cp_config(self) -> CPConfig:
        return CPConfig(search_budget=self.search_budget,
                        subgraph_budget=self.subgraph_budget,
                        beta=self.beta, prior=self.prior)


class _EpisodeRng:
    """Per-episode random state, incl. the goal sampled once per episode."""

    def __init__(self, seed: int):
        self.rng = random.Random(seed)
        self.sampled_goal: Optional[Literal] = None


def anticipate(
    C: CounterplanningTask,
    cplist: CPList,
    composite: frozenset,
    mode: str,
    state: _EpisodeRng,
) -> Action:
    """Next preventer action before a counterplan exists (never None).

    centroid: rank the individual landmarks and hill-climb toward their
    weighted centroid. random: a uniformly random applicable action.
    random-goal: first action toward one landmark sampled (uniformly) once
    per episode. dicp: stand still.
    """
    prev_init = C.project_prev(composite)
    if mode == "dicp":
        return NOOP
    if mode == "random-adicp":
        options = [a for a in C.prev.task.actions if a.pre <= prev_init]
        if not options:
            return NOOP
        return state.rng.choice(options)

    if not cplist.size():
        return NOOP
    if mode == "adicp":
        goals = rank(cplist)
        try:
            a = get_first_action(C.prev.task, prev_init, goals, exact=False)
        except CentroidError:
            return NOOP  # nothing the preventer can still influence
        return a or NOOP
    if mode == "random-goal-adicp":
        lits = cplist.distinct_literals()
        if state.sampled_goal is None:
            state.sampled_goal = state.rng.choice(sorted(lits, key=lambda l: l.name))
        lit = state.sampled_goal
        try:
            target = C.prev.task.literal_id(lit)
        except Exception:
            return NOOP
        goals = WeightedGoalSet.build([(frozenset({target}), 1.0)])
        try:
            a = get_first_action(C.prev.task, prev_init, goals, exact=False)
        except CentroidError:
            return NOOP
        return a or NOOP
    raise CounterplanningError(f"unknown mode: {mode}")


def adicp(
    C: CounterplanningTask,
    seeker_plan: Sequence[Action],
    config: Optional[AlgorithmConfig] = None,
) -> EpisodeTrace:
    """The online counterplanning loop (reactive and anticipatory variants).

    Per iteration: recognize the live goals from the accumulated
    observations, extract counterplanning landmarks, try to plan against one
    (removing entries whose plan comes back empty), otherwise execute the
    anticipation action (a no-op in dicp mode) while the seeker advances.
    The returned preventer plan is the anticipatory prefix followed by the
    counterplan.
    """
    config = config or AlgorithmConfig()
    cpc = config.cp_config()
    trace = EpisodeTrace(algorithm=config.mode)
    state = _EpisodeRng(config.seed)

    live = list(range(len(C.candidates_seek)))
    composite = C.composite_init
    remaining = deque(seeker_plan)
    observed: List[Action] = []
    counterplan: Optional[List[Action]] = None

    it = 0
    while remaining and counterplan is None:
        t0 = time.monotonic()
        note = ""
        # new observation arrived (or none received yet): re-recognize
        try:
            rec = recognize(
                RecognitionProblem(C.seek.task, C.candidates_seek,
                                   ObservationSequence(tuple(observed)),
                                   config.prior),
                beta=config.beta, budget=config.search_budget)
            narrowed = [i for i in live if i in rec.most_probable]
            if narrowed:
                live = narrowed
            else:
                note = "recognizer flipped to pruned goals; keeping live set"
        except RecognitionError as exc:
            note = f"recognition failed: {exc}"

        ext = extract_cpl_full(C, live, composite, cpc)
        common, cplist = ext.common, ext.cplist

        if ext.all_live_vacuous(live):
            # every remaining candidate goal is already unreachable: the
            # blocking happened during anticipation, nothing left to plan
            counterplan = []
            trace.iterations.append(IterationRecord(
                it, list(live), 0, 0, None, True, time.monotonic() - t0,
                "all live goals unreachable; empty counterplan"))
            break

        entries = list(common)
        chosen = None
        while entries and counterplan is None:
            e = select_goal(entries, config.strategy)
            entries.remove(e)
            prev_init = C.project_prev(composite)
            r = solve_optimal(
                C.prev.task.with_init_goal(init=prev_init,
                                           goal=frozenset({e.prev_goal})),
                config.search_budget, C.prev.heuristic)
            if r.status == SOLVED and r.plan:
                counterplan = list(r.plan)
                chosen = e
            elif r.status == RESOURCE_LIMIT:
                note = f"planner budget hit on {e.literal.name}"
                trace.status = "budget"

        if counterplan is not None:
            trace.iterations.append(IterationRecord(
                it, list(live), len(common), cplist.size(),
                None, True, time.monotonic() - t0,
                note or f"counterplan toward {chosen.literal.name}"))
            break

        a_prev = anticipate(C, cplist, composite, config.mode, state)
        a_seek = remaining.popleft()
        composite = joint_apply(composite, C.seek.to_union_action(a_seek),
                                C.prev.to_union_action(a_prev))
        observed.append(a_seek)
        trace.anticipatory_prefix.append(a_prev)
        trace.iterations.append(IterationRecord(
            it, list(live), len(common), cplist.size(),
            a_prev.name, False, time.monotonic() - t0, note))
        it += 1

    trace.counterplan = counterplan
    trace.final_live = list(live)
    return trace

"""Grounded STRIPS representation and single-agent execution semantics.

Facts are interned as dense integer ids per task. Negative preconditions and
goal literals are compiled away at task-build time: every base fact gets a
paired negation fact (``(not <fact>)``), and every action's effects keep the
pair consistent. All downstream machinery (planner, landmarks, recognition)
therefore works on purely positive STRIPS.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

NOOP_NAME = "(noop)"


class ModelError(Exception):
    """Malformed task component."""


@dataclass(frozen=True)
class Fact:
    id: int
    name: str

    def __repr__(self) -> str:
        return f"Fact({self.id}, {self.name!r})"


@dataclass(frozen=True, order=True)
class Literal:
    """A fact name with a polarity; the surface form of goals and landmarks."""

    atom: str
    positive: bool = True

    @property
    def name(self) -> str:
        return self.atom if self.positive else f"(not {self.atom})"

    def negated(self) -> "Literal":
        return Literal(self.atom, not self.positive)

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Action:
    name: str
    pre: frozenset
    add: frozenset
    del_: frozenset
    cost: int = 1

    def __repr__(self) -> str:
        return f"Action({self.name!r})"


NOOP = Action(NOOP_NAME, frozenset(), frozenset(), frozenset(), cost=0)

# A state is a frozenset of fact ids; a plan is a sequence of Actions.
State = frozenset
Plan = Sequence[Action]


def negate_name(atom: str) -> str:
    return f"(not {atom})"


class PlanningTask:
    """Immutable grounded task <F, A, I, G> with negation-pair bookkeeping.

    ``twin[f]`` maps a fact id to the id of its negation pair (both ways).
    ``goal`` is a frozenset of fact ids (negative goal literals already
    resolved to the paired negation fact).
    """

    def __init__(self, facts, actions, init, goal, twin, name=""):
        self.facts: tuple = tuple(facts)
        self.actions: tuple = tuple(actions)
        self.init: frozenset = frozenset(init)
        self.goal: frozenset = frozenset(goal)
        self.twin: dict = dict(twin)
        self.name = name
        self.fact_by_name = {f.name: f.id for f in self.facts}
        self.action_by_name = {a.name: a for a in self.actions}
        self.n_facts = len(self.facts)
        self._validate()

    def _validate(self) -> None:
        ids = {f.id for f in self.facts}
        if ids != set(range(self.n_facts)):
            raise ModelError("fact ids must be dense and contiguous")
        if len(self.fact_by_name) != self.n_facts:
            raise ModelError("fact names must be unique")
        if len(self.action_by_name) != len(self.actions):
            dupes = sorted(
                {a.name for a in self.actions if sum(b.name == a.name for b in self.actions) > 1}
            )
            raise ModelError(f"duplicate grounded action names: {dupes[:5]}")
        if not self.init <= ids:
            raise ModelError("init references unknown fact ids")
        if not self.goal <= ids:
            raise ModelError("goal references unknown fact ids")
        for a in self.actions:
            if a.add & a.del_:
                raise ModelError(f"action {a.name}: add and del overlap")
            if a.cost < 0:
                raise ModelError(f"action {a.name}: negative cost")
            for group in (a.pre, a.add, a.del_):
                if not group <= ids:
                    raise ModelError(f"action {a.name} references unknown fact ids")

    # -- convenience -----------------------------------------------------
    def fact_name(self, fid: int) -> str:
        return self.facts[fid].name

    def fact_id(self, name: str) -> int:
        try:
            return self.fact_by_name[name]
        except KeyError:
            raise ModelError(f"unknown fact: {name}") from None

    def literal_id(self, lit: Literal) -> int:
        """Resolve a literal to a fact id (negatives via the negation pair)."""
        fid = self.fact_id(lit.atom)
        if lit.positive:
            return fid
        try:
            return self.twin[fid]
        except KeyError:
            raise ModelError(f"fact has no negation pair: {lit.atom}") from None

    def literals_to_ids(self, lits: Iterable[Literal]) -> frozenset:
        return frozenset(self.literal_id(l) for l in lits)

    def id_to_literal(self, fid: int) -> Literal:
        name = self.fact_name(fid)
        if name.startswith("(not "):
            return Literal(name[5:-1], False)
        return Literal(name, True)

    def goal_satisfied(self, s: frozenset) -> bool:
        return self.goal <= s

    def with_init_goal(self, init=None, goal=None, name=None) -> "PlanningTask":
        """Cheap variant sharing fact/action tables."""
        t = PlanningTask.__new__(PlanningTask)
        t.facts = self.facts
        t.actions = self.actions
        t.init = self.init if init is None else frozenset(init)
        t.goal = self.goal if goal is None else frozenset(goal)
        t.twin = self.twin
        t.name = self.name if name is None else name
        t.fact_by_name = self.fact_by_name
        t.action_by_name = self.action_by_name
        t.n_facts = self.n_facts
        return t

    def with_actions(self, actions, name=None) -> "PlanningTask":
        return PlanningTask(self.facts, actions, self.init, self.goal, self.twin,
                            name=self.name if name is None else name)

    def dump(self) -> str:
        """Line-oriented debug dump: one fact per line, one action per line."""
        lines = [f"F {f.id} {f.name}" for f in self.facts]
        for a in self.actions:
            pre = " ".join(map(str, sorted(a.pre)))
            add = " ".join(map(str, sorted(a.add)))
            dele = " ".join(map(str, sorted(a.del_)))
            lines.append(f"A {a.name} | pre: {pre} | add: {add} | del: {dele} | cost: {a.cost}")
        lines.append(f"I {' '.join(map(str, sorted(self.init)))}")
        lines.append(f"G {' '.join(map(str, sorted(self.goal)))}")
        return "\n".join(lines) + "\n"


def apply(s: frozenset, a: Action) -> frozenset:
    """Single-agent transition: (s - del) | add when applicable, else s unchanged."""
    if a.pre <= s:
        return (s - a.del_) | a.add
    return s


def applicable(s: frozenset, a: Action) -> bool:
    return a.pre <= s


def execute(s: frozenset, plan: Plan) -> frozenset:
    for a in plan:
        s = apply(s, a)
    return s


def plan_cost(plan: Plan) -> int:
    return sum(a.cost for a in plan)


def validate_plan(task: PlanningTask, plan: Plan, strict: bool = True) -> bool:
    """Check sequential applicability from init and goal satisfaction.

    With strict=True any inapplicable step fails the plan; otherwise the
    absorbing semantics are used and only the final goal test matters.
    """
    s = task.init
    for a in plan:
        if strict and not a.pre <= s:
            return False
        s = apply(s, a)
    return task.goal_satisfied(s)


def build_task(
    fact_names: Iterable[str],
    action_specs: Iterable[tuple],
    init_atoms: Iterable[str],
    goal_literals: Iterable[Literal],
    name: str = "",
) -> PlanningTask:
    """Assemble a task from symbolic components, creating negation pairs.

    ``action_specs`` rows are (name, pre_literals, add_atoms, del_atoms, cost)
    where pre_literals are Literal and effects are positive atom names.
    Effects are canonicalized (add wins over del, matching the transition
    function) and extended to keep negation pairs consistent.
    """
    base = sorted(set(fact_names))
    base_set = set(base)
    init_set = set(init_atoms)
    if not init_set <= base_set:
        missing = sorted(init_set - base_set)
        raise ModelError(f"init atom not in fact table: {missing[0]}")

    all_names = sorted(base_set | {negate_name(b) for b in base_set})
    facts = tuple(Fact(i, n) for i, n in enumerate(all_names))
    by_name = {f.name: f.id for f in facts}
    twin = {}
    for b in base_set:
        p, n = by_name[b], by_name[negate_name(b)]
        twin[p] = n
        twin[n] = p

    init_ids = {by_name[a] for a in init_set}
    init_ids |= {twin[by_name[b]] for b in base_set if b not in init_set}

    actions = []
    for spec in action_specs:
        aname, pre_lits, add_atoms, del_atoms, cost = spec
        pre = set()
        for lit in pre_lits:
            if lit.atom not in base_set:
                raise ModelError(f"action {aname}: unknown precondition atom {lit.atom}")
            fid = by_name[lit.atom]
            pre.add(fid if lit.positive else twin[fid])
        adds = {by_name[a] for a in add_atoms}
        dels = {by_name[d] for d in del_atoms}
        dels -= adds  # add wins, per the transition function
        full_add = adds | {twin[d] for d in dels}
        full_del = dels | {twin[a] for a in adds}
        actions.append(Action(aname, frozenset(pre), frozenset(full_add),
                              frozenset(full_del), cost))
    actions.sort(key=lambda a: a.name)

    goal_ids = set()
    for lit in goal_literals:
        if lit.atom not in base_set:
            raise ModelError(f"goal literal over unknown atom: {lit.atom}")
        fid = by_name[lit.atom]
        goal_ids.add(fid if lit.positive else twin[fid])

    return PlanningTask(facts, tuple(actions), frozenset(init_ids),
                        frozenset(goal_ids), twin, name=name)


def close_world(task: PlanningTask, base_true: Iterable[int]) -> frozenset:
    """Complete a set of true base facts with the consistent negation pairs."""
    true = set(base_true)
    for fid in list(task.twin):
        lit = task.id_to_literal(fid)
        if lit.positive and fid not in true:
            true.add(task.twin[fid])
    return frozenset(true)


def plan_to_text(plan: Plan) -> str:
    lines = [a.name for a in plan]
    lines.append(f"; cost = {plan_cost(plan)}")
    return "\n".join(lines) + "\n"


def plan_from_text(text: str, lookup: Mapping[str, Action]) -> tuple:
    """Parse the one-action-per-line plan format against an action table."""
    steps = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith(";"):
            continue
        if line == NOOP_NAME:
            steps.append(NOOP)
            continue
        if line not in lookup:
            raise ModelError(f"unknown action in plan: {line}")
        steps.append(lookup[line])
    return tuple(steps)

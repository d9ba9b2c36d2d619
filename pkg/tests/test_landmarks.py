import random

import pytest

from counterplan.landmarks import (dump_landmarks, extract_landmarks,
                                   relaxed_solvable, requirable_facts)
from counterplan.model import Literal, build_task

from conftest import grid_task
from oracles import is_landmark_oracle


def chain_task():
    """g achievable only through m: both are landmarks."""
    facts = ["(s)", "(m)", "(g)"]
    actions = [
        ("(get-m)", [Literal("(s)")], ["(m)"], [], 1),
        ("(get-g)", [Literal("(m)")], ["(g)"], [], 1),
    ]
    return build_task(facts, actions, ["(s)"], [Literal("(g)")])


def random_blocks(rng, n=3):
    """Plain blocksworld with n blocks, random init and goal stacks."""
    blocks = [chr(ord("a") + i) for i in range(n)]
    facts = ["(arm-empty)"]
    for b in blocks:
        facts += [f"(clear {b})", f"(on-table {b})", f"(holding {b})"]
        facts += [f"(on {b} {c})" for c in blocks if c != b]
    actions = []
    for b in blocks:
        actions.append((f"(pickup {b})",
                        [Literal(f"(clear {b})"), Literal(f"(on-table {b})"),
                         Literal("(arm-empty)")],
                        [f"(holding {b})"],
                        [f"(on-table {b})", f"(clear {b})", "(arm-empty)"], 1))
        actions.append((f"(putdown {b})", [Literal(f"(holding {b})")],
                        [f"(on-table {b})", f"(clear {b})", "(arm-empty)"],
                        [f"(holding {b})"], 1))
        for c in blocks:
            if c == b:
                continue
            actions.append((f"(stack {b} {c})",
                            [Literal(f"(holding {b})"), Literal(f"(clear {c})")],
                            [f"(on {b} {c})", f"(clear {b})", "(arm-empty)"],
                            [f"(holding {b})", f"(clear {c})"], 1))
            actions.append((f"(unstack {b} {c})",
                            [Literal(f"(clear {b})"), Literal(f"(on {b} {c})"),
                             Literal("(arm-empty)")],
                            [f"(holding {b})", f"(clear {c})"],
                            [f"(on {b} {c})", f"(clear {b})", "(arm-empty)"], 1))

    def stacks():
        order = list(blocks)
        rng.shuffle(order)
        towers = []
        for b in order:
            if towers and rng.random() < 0.5:
                rng.choice(towers).append(b)
            else:
                towers.append([b])
        return towers

    init = ["(arm-empty)"]
    for tower in stacks():
        init.append(f"(on-table {tower[0]})")
        init.append(f"(clear {tower[-1]})")
        for below, above in zip(tower, tower[1:]):
            init.append(f"(on {above} {below})")
    goal = []
    for tower in stacks():
        goal.append(Literal(f"(on-table {tower[0]})"))
        for below, above in zip(tower, tower[1:]):
            goal.append(Literal(f"(on {above} {below})"))
    return build_task(facts, actions, init, goal)


class TestExtractLandmarks:
    def test_unique_achiever_chain(self):
        t = chain_task()
        lms = extract_landmarks(t)
        assert t.fact_id("(g)") in lms.landmarks
        assert t.fact_id("(m)") in lms.landmarks

    def test_goal_inclusion(self):
        t = grid_task(3, 3)
        lms = extract_landmarks(t)
        assert t.goal <= lms.landmarks

    def test_fig3_corridor_cells_are_bus_landmarks(self, fig3):
        t = fig3.seeker_task_for(0)
        lms = extract_landmarks(t)
        for cell in ("c3-2", "c3-3", "c3-4", "c1-5"):
            assert t.fact_id(f"(free {cell})") in lms.landmarks, cell

    def test_unsolvable_returns_goals_flagged(self):
        t = build_task(["(p)", "(q)"], [], ["(p)"], [Literal("(q)")])
        lms = extract_landmarks(t)
        assert lms.task_unsolvable
        assert lms.landmarks == t.goal

    def test_all_returned_landmarks_pass_complete_search_oracle(self):
        rng = random.Random(11)
        for _ in range(8):
            t = random_blocks(rng, 3)
            lms = extract_landmarks(t)
            for fid in lms.landmarks:
                assert is_landmark_oracle(t, fid), t.fact_name(fid)

    def test_candidate_filter_matches_full_run(self, fig3):
        t = fig3.seeker_task_for(0)
        full = extract_landmarks(t)
        pool = sorted(requirable_facts(t))[::2]
        filtered = extract_landmarks(t, candidates=pool)
        assert filtered.landmarks - frozenset(pool) <= t.goal
        assert filtered.landmarks & frozenset(pool) == \
            full.landmarks & frozenset(pool)

    def test_relaxed_monotonicity(self):
        # every landmark of the real task is a landmark of its relaxation:
        # verify achiever-deletion also kills the delete-relaxed task
        t = chain_task()
        lms = extract_landmarks(t)
        for fid in lms.landmarks:
            if fid in t.init:
                continue
            skip = {a.name for a in t.actions if fid in a.add}
            assert not relaxed_solvable(t, skip=skip)


def test_dump_lists_one_per_line(fig3):
    t = fig3.seeker_task_for(0)
    lms = extract_landmarks(t)
    dump = dump_landmarks(t, lms)
    assert len([l for l in dump.splitlines() if l and not l.startswith(";")]) == \
        len(lms.landmarks)

import pytest

from counterplan.centroids import (CentroidError, CostEvaluator,
                                   WeightedGoalSet, extract_centroid,
                                   get_first_action, weighted_avg_cost)
from counterplan.counterplanning import extract_list_of_cpl, rank
from counterplan.model import NOOP, Literal, apply, build_task, execute
from counterplan.planner import solve_optimal

from conftest import corridor_task, grid_task


def goalset(task, *names_weights):
    return WeightedGoalSet.build([
        (frozenset({task.fact_id(n)}), w) for n, w in names_weights])


class TestWeightedGoalSet:
    def test_duplicates_merge_by_sum(self):
        t = corridor_task(3)
        g = WeightedGoalSet.build([
            (frozenset({t.fact_id("(at c1)")}), 0.5),
            (frozenset({t.fact_id("(at c1)")}), 0.25),
        ])
        assert len(g) == 1
        assert g.entries[0][1] == 0.75

    def test_nonpositive_weight_rejected(self):
        t = corridor_task(3)
        with pytest.raises(CentroidError):
            WeightedGoalSet.build([(frozenset({t.fact_id("(at c1)")}), 0.0)])


class TestWeightedAvgCost:
    def test_satisfied_single_goal_zero(self):
        t = corridor_task(3, start=2)
        g = goalset(t, ("(at c2)", 1.0))
        assert weighted_avg_cost(t, t.init, g, exact=True) == 0.0

    def test_two_goals_arithmetic(self):
        t = corridor_task(5, start=3)
        g = goalset(t, ("(at c1)", 1.0), ("(at c5)", 1.0))
        # distances 2 and 2 -> (1*2 + 1*2)/2 = 2
        assert weighted_avg_cost(t, t.init, g, exact=True) == 2.0

    def test_unreachable_goal_dropped_divisor_kept(self):
        t = corridor_task(3, start=1)
        unreachable = frozenset({t.fact_id("(at c1)"), t.fact_id("(at c3)")})
        g = WeightedGoalSet.build([
            (frozenset({t.fact_id("(at c3)")}), 1.0),
            (unreachable, 1.0),
        ])
        # reachable goal costs 2; divisor stays 2 -> 1.0
        assert weighted_avg_cost(t, t.init, g, exact=True) == 1.0

    def test_all_unreachable_errors(self):
        t = corridor_task(3, start=1)
        unreachable = frozenset({t.fact_id("(at c1)"), t.fact_id("(at c3)")})
        g = WeightedGoalSet.build([(unreachable, 1.0)])
        with pytest.raises(CentroidError):
            weighted_avg_cost(t, t.init, g, exact=True)

    def test_scaling_invariance_of_argmin(self, fig3):
        # positive rescaling of the weights cannot change the greedy choice
        cplist = extract_list_of_cpl(fig3, [0, 1, 2])
        goals = rank(cplist)
        scaled = WeightedGoalSet.build(
            [(g, w * 7.5) for g, w in goals.entries])
        t = fig3.prev.task
        a1 = get_first_action(t, t.init, goals)
        a2 = get_first_action(t, t.init, scaled)
        assert a1.name == a2.name


class TestGetFirstAction:
    def test_fig3_first_anticipation_move(self, fig3):
        cplist = extract_list_of_cpl(fig3, [0, 1, 2])
        goals = rank(cplist)
        t = fig3.prev.task
        a = get_first_action(t, t.init, goals)
        assert a.name == "(move c5-2 c4-2)"

    def test_local_minimum_yields_noop(self):
        # start is the unique centroid and every neighbour is strictly worse
        t = corridor_task(5, start=3)
        g = goalset(t, ("(at c1)", 1.0), ("(at c5)", 1.0), ("(at c3)", 1.0))
        a = get_first_action(t, t.init, g, exact=True)
        assert a.name == NOOP.name

    def test_single_goal_follows_optimal_plan(self):
        t = corridor_task(6, start=2, goal=6)
        g = goalset(t, ("(at c6)", 1.0))
        opt = solve_optimal(t)
        s = t.init
        taken = []
        for _ in range(opt.cost):
            a = get_first_action(t, s, g, exact=True)
            taken.append(a.name)
            s = apply(s, a)
        assert t.goal <= s
        assert taken == [a.name for a in opt.plan]

    def test_greedy_never_worsens_when_improvement_exists(self):
        t = grid_task(4, 4, start=(1, 1))
        g = goalset(t, ("(at c4-4)", 1.0), ("(at c4-1)", 2.0))
        ev = CostEvaluator(t, True)
        s = t.init
        for _ in range(10):
            before = weighted_avg_cost(t, s, g, True, ev)
            a = get_first_action(t, s, g, exact=True, evaluator=ev)
            after = weighted_avg_cost(t, apply(s, a), g, True, ev)
            assert after <= before
            if a.name == NOOP.name:
                break
            s = apply(s, a)


class TestExtractCentroid:
    def test_single_goal_centroid_satisfies_it(self):
        t = corridor_task(4, start=1, goal=4)
        g = goalset(t, ("(at c4)", 1.0))
        s = extract_centroid(t, g, exhaustive=True)
        assert t.fact_id("(at c4)") in s

    def test_corridor_middle_cell_is_an_exhaustive_argmin(self):
        # along a corridor the average distance to both ends is constant, so
        # the argmin is a 5-way tie; the middle cell belongs to it and the
        # returned state must be a member too
        t = corridor_task(5, start=1)
        g = goalset(t, ("(at c1)", 1.0), ("(at c5)", 1.0))
        ev = CostEvaluator(t, True)
        scores = {}
        for i in range(1, 6):
            s = frozenset({t.fact_id(f"(at c{i})")}) | frozenset(
                t.twin[t.fact_id(f"(at c{j})")] for j in range(1, 6) if j != i)
            scores[i] = weighted_avg_cost(t, s, g, True, ev)
        best = min(scores.values())
        assert scores[3] == best
        got = extract_centroid(t, g, exhaustive=True)
        got_pos = next(i for i in range(1, 6)
                       if t.fact_id(f"(at c{i})") in got)
        assert scores[got_pos] == best

    def test_corridor_middle_unique_with_center_weight(self):
        # adding any weight on the centre makes the middle the strict argmin
        t = corridor_task(5, start=1)
        g = goalset(t, ("(at c1)", 1.0), ("(at c5)", 1.0), ("(at c3)", 0.5))
        s = extract_centroid(t, g, exhaustive=True)
        assert t.fact_id("(at c3)") in s

    def test_exhaustive_equals_brute_force_argmin(self):
        t = grid_task(3, 3, start=(2, 2))
        g = goalset(t, ("(at c1-1)", 1.0), ("(at c3-3)", 1.0), ("(at c3-1)", 2.0))
        got = extract_centroid(t, g, exhaustive=True)
        # brute force over every reachable state (all 9 cells)
        best, best_cost = None, None
        for x in range(1, 4):
            for y in range(1, 4):
                s = execute(t.init, [])
                cost = (abs(x - 1) + abs(y - 1)) * 1 + (abs(x - 3) + abs(y - 3)) + 2 * (abs(x - 3) + abs(y - 1))
                if best_cost is None or cost < best_cost:
                    best, best_cost = (x, y), cost
        assert t.fact_id(f"(at c{best[0]}-{best[1]})") in got

    def test_fig3_centroid_sits_on_the_west_bank(self, fig3):
        cplist = extract_list_of_cpl(fig3, [0, 1, 2])
        goals = rank(cplist)
        t = fig3.prev.task
        s = extract_centroid(t, goals, exhaustive=True, max_states=5000)
        pos = [t.fact_name(f) for f in s if t.fact_name(f).startswith("(at-prev")]
        assert pos[0] in {"(at-prev c4-2)", "(at-prev c3-2)", "(at-prev c3-3)"}

    def test_greedy_reaches_local_minimum(self, fig3):
        cplist = extract_list_of_cpl(fig3, [0, 1, 2])
        goals = rank(cplist)
        t = fig3.prev.task
        s = extract_centroid(t, goals)
        ev = CostEvaluator(t, False)
        here = weighted_avg_cost(t, s, goals, False, ev)
        for a in t.actions:
            if a.pre <= s:
                assert weighted_avg_cost(t, apply(s, a), goals, False, ev) >= here

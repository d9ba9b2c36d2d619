import pytest

from counterplan.model import Literal, build_task
from counterplan import generators as gens


def corridor_task(n=5, start=1, goal=None, name="corridor"):
    """One-dimensional corridor: cells 1..n, unit moves both ways."""
    goal = n if goal is None else goal
    facts = [f"(at c{i})" for i in range(1, n + 1)]
    actions = []
    for i in range(1, n + 1):
        for j in (i - 1, i + 1):
            if 1 <= j <= n:
                actions.append((f"(move c{i} c{j})",
                                [Literal(f"(at c{i})")],
                                [f"(at c{j})"], [f"(at c{i})"], 1))
    return build_task(facts, actions, [f"(at c{start})"],
                      [Literal(f"(at c{goal})")], name=name)


def grid_task(w, h, obstacles=(), start=(1, 1), goal=(None, None), name="grid"):
    """Single-agent grid with blocked cells; unit 4-neighbour moves."""
    gx = w if goal[0] is None else goal[0]
    gy = h if goal[1] is None else goal[1]
    blocked = set(obstacles)
    cells = [(x, y) for x in range(1, w + 1) for y in range(1, h + 1)
             if (x, y) not in blocked]
    facts = [f"(at c{x}-{y})" for x, y in cells]
    actions = []
    for (x, y) in cells:
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nx, ny = x + dx, y + dy
            if (nx, ny) in blocked or not (1 <= nx <= w and 1 <= ny <= h):
                continue
            actions.append((f"(move c{x}-{y} c{nx}-{ny})",
                            [Literal(f"(at c{x}-{y})")],
                            [f"(at c{nx}-{ny})"], [f"(at c{x}-{y})"], 1))
    return build_task(facts, actions, [f"(at c{start[0]}-{start[1]})"],
                      [Literal(f"(at c{gx}-{gy})")], name=name)


@pytest.fixture(scope="session")
def fig3():
    return gens.fig3_task()


@pytest.fixture(scope="session")
def fig3_bundle():
    return gens.fig3_bundle()


@pytest.fixture(scope="session")
def tiny_police_tasks():
    """Small seeded police-control tasks for oracle-grade comparisons."""
    out = []
    seed = 0
    while len(out) < 6 and seed < 40:
        cfg = gens.GeneratorConfig(domain="police-control", seed=seed,
                                   grid_side=4, obstacle_fraction=0.15,
                                   booths=1, candidate_goals=2)
        try:
            out.append(gens.bundle_to_task(gens.gen_police_control(cfg)))
        except gens.GenerationError:
            pass
        seed += 1
    return out


@pytest.fixture(scope="session")
def small_blocks_task():
    cfg = gens.GeneratorConfig(domain="painted-blocks-words", seed=5,
                               blocks=5, rooms=3, words=3,
                               word_min=3, word_max=3)
    return gens.bundle_to_task(gens.gen_painted_blocks(cfg))

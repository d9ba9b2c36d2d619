"""Benchmark task generators and the hand-authored walkthrough fixture.

Two generated families: police-control (a pursuit grid where the seeker must
phone from an untapped booth and escape through one of several stations) and
painted-blocks-words (the seeker spells a word with blocks, the preventer
paints exposed blocks to freeze them). Every generated seeker task is checked
solvable in isolation before a bundle is emitted; generation is a pure
function of the seed.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Set, Tuple

from .bundles import Bundle, render_condition
from .counterplanning import CounterplanningTask, build_counterplanning_task
from .model import Literal
from .planner import SearchBudget, solve_optimal

LETTERS = "abcdefgh"


class GenerationError(Exception):
    pass


@dataclass
class GeneratorConfig:
    domain: str = "police-control"       # or "painted-blocks-words"
    seed: int = 0
    # police-control knobs
    grid_side: int = 8
    obstacle_fraction: float = 0.25
    booths: int = 10
    candidate_goals: int = 3
    # painted-blocks knobs
    blocks: int = 8
    rooms: int = 5
    words: int = 5
    word_min: int = 3
    word_max: int = 6
    paint_buckets: int = 2
    # generation safety
    max_retries: int = 200
    check_budget: SearchBudget = field(default_factory=lambda: SearchBudget(400_000, 120.0))


def generate(cfg: GeneratorConfig) -> Bundle:
    if cfg.domain == "police-control":
        return gen_police_control(cfg)
    if cfg.domain == "painted-blocks-words":
        return gen_painted_blocks(cfg)
    raise GenerationError(f"unknown domain: {cfg.domain}")


def bundle_to_task(bundle: Bundle) -> CounterplanningTask:
    return build_counterplanning_task(
        bundle.domain_text, bundle.seeker_text, bundle.preventer_text,
        bundle.candidate_conditions(), bundle.truth_index)


# ---------------------------------------------------------------------------
# police control
# ---------------------------------------------------------------------------

POLICE_DOMAIN = """\
(define (domain police-control)
  (:requirements :strips :typing :negative-preconditions)
  (:types cell - object)
  (:predicates (at-seek ?c - cell) (at-prev ?c - cell) (free ?c - cell)
               (adjacent ?a - cell ?b - cell) (booth ?c - cell)
               (tapped ?c - cell) (called) (station-base ?c - cell)
               (controlled ?c - cell))
  (:action move
    :parameters (?from - cell ?to - cell)
    :precondition (and (at-seek ?from) (adjacent ?from ?to) (free ?to))
    :effect (and (at-seek ?to) (free ?from)
                 (not (at-seek ?from)) (not (free ?to))))
  (:action call
    :parameters (?c - cell)
    :precondition (and (at-seek ?c) (booth ?c) (not (tapped ?c)))
    :effect (and (called)))
  (:action move
    :parameters (?from - cell ?to - cell)
    :precondition (and (at-prev ?from) (adjacent ?from ?to) (free ?to))
    :effect (and (at-prev ?to) (free ?from)
                 (not (at-prev ?from)) (not (free ?to))))
  (:action tap
    :parameters (?b - cell ?s - cell)
    :precondition (and (at-prev ?s) (station-base ?s) (booth ?b))
    :effect (and (tapped ?b)))
  (:action set-control
    :parameters (?at - cell ?c - cell)
    :precondition (and (at-prev ?at) (adjacent ?at ?c) (free ?c))
    :effect (and (controlled ?c) (not (free ?c))))
)
"""


def _cell(x: int, y: int) -> str:
    return f"c{x}-{y}"


def _grid_problem(name: str, domain: str, side: int, free: Set[Tuple[int, int]],
                  edges: List[Tuple[str, str]], agent_atom: str,
                  occupied: Sequence[Tuple[int, int]], extra_atoms: Sequence[str],
                  goal: str) -> str:
    cells = " ".join(_cell(x, y) for x in range(1, side + 1)
                     for y in range(1, side + 1))
    init = [agent_atom]
    occ = set(occupied)
    for (x, y) in sorted(free):
        if (x, y) not in occ:
            init.append(f"(free {_cell(x, y)})")
    for a, b in edges:
        init.append(f"(adjacent {a} {b})")
    init.extend(extra_atoms)
    init_text = "\n    ".join(sorted(init))
    return (f"(define (problem {name})\n  (:domain {domain})\n"
            f"  (:objects {cells} - cell)\n"
            f"  (:init {init_text})\n"
            f"  (:goal {goal})\n)\n")


def _grid_edges(side: int, free: Set[Tuple[int, int]],
                extra: Sequence[Tuple[Tuple[int, int], Tuple[int, int]]] = ()) -> List[Tuple[str, str]]:
    edges = []
    for (x, y) in sorted(free):
        for dx, dy in ((1, 0), (0, 1)):
            nx, ny = x + dx, y + dy
            if (nx, ny) in free:
                edges.append((_cell(x, y), _cell(nx, ny)))
                edges.append((_cell(nx, ny), _cell(x, y)))
    for a, b in extra:
        edges.append((_cell(*a), _cell(*b)))
        edges.append((_cell(*b), _cell(*a)))
    return edges


def _components(free: Set[Tuple[int, int]]) -> List[Set[Tuple[int, int]]]:
    seen = set()
    comps = []
    for start in free:
        if start in seen:
            continue
        comp = {start}
        stack = [start]
        seen.add(start)
        while stack:
            x, y = stack.pop()
            for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                n = (x + dx, y + dy)
                if n in free and n not in seen:
                    seen.add(n)
                    comp.add(n)
                    stack.append(n)
        comps.append(comp)
    return comps


def gen_police_control(cfg: GeneratorConfig) -> Bundle:
    rng = random.Random(cfg.seed)
    side = cfg.grid_side
    n_cells = side * side
    n_obstacles = int(round(cfg.obstacle_fraction * n_cells))
    needed = 2 + cfg.candidate_goals + cfg.booths

    last_error = "no attempt made"
    for attempt in range(cfg.max_retries):
        all_cells = [(x, y) for x in range(1, side + 1) for y in range(1, side + 1)]
        # a river crosses the city and is passable only at a few bridges;
        # the remaining obstacle budget is scattered uniformly (tiny maps
        # get scatter only)
        river = set()
        if side >= 5:
            vertical = rng.random() < 0.5
            line = rng.randint(3, side - 2)
            bridges = set(rng.sample(range(1, side + 1), rng.randint(2, 3)))
            river = {
                ((line, k) if vertical else (k, line))
                for k in range(1, side + 1) if k not in bridges
            }
        scatter_budget = max(0, n_obstacles - len(river))
        candidates_for_scatter = [c for c in all_cells if c not in river]
        obstacles = river | set(rng.sample(candidates_for_scatter, scatter_budget))
        free = set(all_cells) - obstacles
        if len(free) < needed:
            last_error = "not enough free cells"
            continue
        comps = max(_components(free), key=len, default=set())
        if len(comps) < needed:
            last_error = "largest free component too small"
            continue
        # stations sit by the map corners (escape points); picks the free
        # cell nearest each corner
        corners = [(1, 1), (1, side), (side, 1), (side, side)]
        rng.shuffle(corners)
        stations = []
        for corner in corners:
            if len(stations) >= cfg.candidate_goals:
                break
            best = min(
                (c for c in comps if c not in stations),
                key=lambda c: (abs(c[0] - corner[0]) + abs(c[1] - corner[1]),
                               c), default=None)
            if best is not None:
                stations.append(best)
        rest = sorted(comps - set(stations))
        if len(stations) < cfg.candidate_goals or len(rest) < 2 + cfg.booths:
            last_error = "could not place stations and booths"
            continue
        # the seeker sets off from the city centre (its early moves stay
        # ambiguous between the corner stations); the patrol parks anywhere
        mid = ((side + 1) / 2.0, (side + 1) / 2.0)
        seek_start = min(rest, key=lambda c: (abs(c[0] - mid[0]) + abs(c[1] - mid[1]), c))
        rest.remove(seek_start)
        spots = rng.sample(rest, 1 + cfg.booths)
        prev_start = spots[0]
        booths = spots[1:]

        edges = _grid_edges(side, free)
        booth_atoms = [f"(booth {_cell(*b)})" for b in booths]
        station_base = [f"(station-base {_cell(*prev_start)})"]
        candidates = [
            render_condition([Literal("(called)"), Literal(f"(at-seek {_cell(*st)})")])
            for st in stations
        ]
        truth = rng.randrange(cfg.candidate_goals)

        seek_text = _grid_problem(
            f"police-seek-s{cfg.seed}", "police-control", side, free, edges,
            f"(at-seek {_cell(*seek_start)})", [seek_start, prev_start],
            booth_atoms, candidates[truth])
        prev_text = _grid_problem(
            f"police-prev-s{cfg.seed}", "police-control", side, free, edges,
            f"(at-prev {_cell(*prev_start)})", [seek_start, prev_start],
            booth_atoms + station_base, "(and)")

        bundle = Bundle(POLICE_DOMAIN, seek_text, prev_text, candidates, truth,
                        name=f"police-{side}x{side}-s{cfg.seed}")
        ok, why = _seeker_solvable(bundle, cfg)
        if ok:
            return bundle
        last_error = why
    raise GenerationError(
        f"police-control generation failed after {cfg.max_retries} retries: {last_error}")


def _seeker_solvable(bundle: Bundle, cfg: GeneratorConfig) -> Tuple[bool, str]:
    """Every candidate goal must be reachable for the seeker in isolation."""
    try:
        C = bundle_to_task(bundle)
    except Exception as exc:
        return False, f"grounding failed: {exc}"
    for i in range(len(C.candidates_seek)):
        r = solve_optimal(C.seeker_task_for(i), cfg.check_budget, C.seek.heuristic)
        if not r.solved:
            return False, f"candidate {i} not solvable for the seeker ({r.status})"
    return True, ""


# ---------------------------------------------------------------------------
# painted blocks-words
# ---------------------------------------------------------------------------

BLOCKS_DOMAIN = """\
(define (domain painted-blocks)
  (:requirements :strips :typing :negative-preconditions :equality)
  (:types block room - object)
  (:predicates (on ?b - block ?c - block) (on-table ?b - block)
               (clear ?b - block) (holding ?b - block) (arm-empty)
               (painted ?b - block) (prev-in ?r - room)
               (connected ?r1 - room ?r2 - room) (paint-at ?r - room)
               (has-paint) (build-room ?r - room))
  (:action pickup
    :parameters (?b - block)
    :precondition (and (clear ?b) (on-table ?b) (arm-empty) (not (painted ?b)))
    :effect (and (holding ?b) (not (on-table ?b)) (not (clear ?b)) (not (arm-empty))))
  (:action putdown
    :parameters (?b - block)
    :precondition (and (holding ?b))
    :effect (and (on-table ?b) (clear ?b) (arm-empty) (not (holding ?b))))
  (:action stack
    :parameters (?b - block ?c - block)
    :precondition (and (not (= ?b ?c)) (holding ?b) (clear ?c) (not (painted ?c)))
    :effect (and (on ?b ?c) (clear ?b) (arm-empty) (not (holding ?b)) (not (clear ?c))))
  (:action unstack
    :parameters (?b - block ?c - block)
    :precondition (and (not (= ?b ?c)) (clear ?b) (on ?b ?c) (arm-empty) (not (painted ?b)))
    :effect (and (holding ?b) (clear ?c) (not (on ?b ?c)) (not (clear ?b)) (not (arm-empty))))
  (:action prev-move
    :parameters (?r1 - room ?r2 - room)
    :precondition (and (not (= ?r1 ?r2)) (prev-in ?r1) (connected ?r1 ?r2))
    :effect (and (prev-in ?r2) (not (prev-in ?r1))))
  (:action take-paint
    :parameters (?r - room)
    :precondition (and (prev-in ?r) (paint-at ?r))
    :effect (and (has-paint)))
  (:action paint
    :parameters (?b - block ?r - room)
    :precondition (and (has-paint) (prev-in ?r) (build-room ?r) (clear ?b))
    :effect (and (painted ?b)))
)
"""


def _towers(rng: random.Random, blocks: Sequence[str]) -> List[List[str]]:
    """Random towers, bottom block first in each list."""
    shuffled = list(blocks)
    rng.shuffle(shuffled)
    towers: List[List[str]] = []
    for b in shuffled:
        if towers and rng.random() < 0.55:
            rng.choice(towers).append(b)
        else:
            towers.append([b])
    return towers


def _word_goal(word: Sequence[str]) -> str:
    """Tower spelling the word top-to-bottom, exactly."""
    lits = [Literal(f"(clear {word[0]})")]
    for top, below in zip(word, word[1:]):
        lits.append(Literal(f"(on {top} {below})"))
    lits.append(Literal(f"(on-table {word[-1]})"))
    return render_condition(lits)


def gen_painted_blocks(cfg: GeneratorConfig) -> Bundle:
    rng = random.Random(cfg.seed)
    if cfg.blocks > len(LETTERS):
        raise GenerationError(f"at most {len(LETTERS)} blocks supported")
    blocks = list(LETTERS[:cfg.blocks])
    rooms = [f"r{i}" for i in range(1, cfg.rooms + 1)]

    last_error = "no attempt made"
    for attempt in range(cfg.max_retries):
        towers = _towers(rng, blocks)
        words: List[List[str]] = []
        tries = 0
        while len(words) < cfg.words and tries < 500:
            tries += 1
            k = rng.randint(cfg.word_min, min(cfg.word_max, len(blocks)))
            w = rng.sample(blocks, k)
            if w not in words:
                words.append(w)
        if len(words) < cfg.words:
            last_error = "could not sample enough distinct words"
            continue

        # connected room graph: a random spanning tree plus a few chords
        order = list(rooms)
        rng.shuffle(order)
        room_edges = set()
        for i in range(1, len(order)):
            a = order[i]
            b = order[rng.randrange(i)]
            room_edges.add((a, b))
        for _ in range(max(0, len(rooms) - 3)):
            a, b = rng.sample(rooms, 2)
            room_edges.add((a, b))
        build_room = rng.choice(rooms)
        paint_rooms = rng.sample(rooms, min(cfg.paint_buckets, len(rooms)))
        prev_room = rng.choice(rooms)

        on_atoms, clear_atoms, table_atoms = [], [], []
        for tower in towers:
            table_atoms.append(f"(on-table {tower[0]})")
            clear_atoms.append(f"(clear {tower[-1]})")
            for below, above in zip(tower, tower[1:]):
                on_atoms.append(f"(on {above} {below})")

        shared = on_atoms + clear_atoms + table_atoms
        room_atoms = []
        for a, b in sorted(room_edges):
            room_atoms.append(f"(connected {a} {b})")
            room_atoms.append(f"(connected {b} {a})")
        room_atoms.append(f"(build-room {build_room})")
        room_atoms.extend(f"(paint-at {r})" for r in sorted(paint_rooms))

        candidates = [_word_goal(w) for w in words]
        truth = rng.randrange(len(words))

        objects = f"{' '.join(blocks)} - block {' '.join(rooms)} - room"
        seek_init = "\n    ".join(sorted(shared + ["(arm-empty)"]))
        prev_init = "\n    ".join(sorted(shared + room_atoms + [f"(prev-in {prev_room})"]))
        seek_text = (f"(define (problem blocks-seek-s{cfg.seed})\n"
                     f"  (:domain painted-blocks)\n  (:objects {objects})\n"
                     f"  (:init {seek_init})\n  (:goal {candidates[truth]})\n)\n")
        prev_text = (f"(define (problem blocks-prev-s{cfg.seed})\n"
                     f"  (:domain painted-blocks)\n  (:objects {objects})\n"
                     f"  (:init {prev_init})\n  (:goal (and))\n)\n")

        bundle = Bundle(BLOCKS_DOMAIN, seek_text, prev_text, candidates, truth,
                        name=f"blocks-{cfg.blocks}b{cfg.rooms}r-s{cfg.seed}")
        ok, why = _seeker_solvable(bundle, cfg)
        if ok:
            return bundle
        last_error = why
    raise GenerationError(
        f"painted-blocks generation failed after {cfg.max_retries} retries: {last_error}")


# ---------------------------------------------------------------------------
# the 5x5 walkthrough fixture (hand-authored, not generated)
# ---------------------------------------------------------------------------

FIG3_DOMAIN = """\
(define (domain police-grid)
  (:requirements :strips :typing :negative-preconditions)
  (:types cell - object)
  (:predicates (at-seek ?c - cell) (at-prev ?c - cell) (free ?c - cell)
               (adjacent ?a - cell ?b - cell))
  (:action move
    :parameters (?from - cell ?to - cell)
    :precondition (and (at-seek ?from) (adjacent ?from ?to) (free ?to))
    :effect (and (at-seek ?to) (free ?from)
                 (not (at-seek ?from)) (not (free ?to))))
  (:action move
    :parameters (?from - cell ?to - cell)
    :precondition (and (at-prev ?from) (adjacent ?from ?to) (free ?to))
    :effect (and (at-prev ?to) (free ?from)
                 (not (at-prev ?from)) (not (free ?to))))
)
"""

# 5x5 grid, column-row names, a river on row 3 crossable only through the
# c3-2 / c3-3 / c3-4 corridor, and a dock edge c4-2 <-> c5-1 giving the
# south-east station a second approach. Stations: c1-5 (bus), c5-5 (train),
# c5-1 (plane). Seeker starts at c1-1, patrol at c5-2.
FIG3_RIVER = {(1, 3), (2, 3), (4, 3), (5, 3)}
FIG3_SEEK_START = (1, 1)
FIG3_PREV_START = (5, 2)
FIG3_STATIONS = {"bus": (1, 5), "train": (5, 5), "plane": (5, 1)}


def fig3_bundle() -> Bundle:
    side = 5
    free = {(x, y) for x in range(1, 6) for y in range(1, 6)} - FIG3_RIVER
    edges = _grid_edges(side, free, extra=[((4, 2), (5, 1))])
    candidates = [
        render_condition([Literal(f"(at-seek {_cell(*FIG3_STATIONS[name])})")])
        for name in ("bus", "train", "plane")
    ]
    truth = 0  # the terrorist heads for the bus station
    seek_text = _grid_problem(
        "fig3-seek", "police-grid", side, free, edges,
        f"(at-seek {_cell(*FIG3_SEEK_START)})",
        [FIG3_SEEK_START, FIG3_PREV_START], [], candidates[truth])
    prev_text = _grid_problem(
        "fig3-prev", "police-grid", side, free, edges,
        f"(at-prev {_cell(*FIG3_PREV_START)})",
        [FIG3_SEEK_START, FIG3_PREV_START], [], "(and)")
    return Bundle(FIG3_DOMAIN, seek_text, prev_text, candidates, truth,
                  name="fig3")


def fig3_task() -> CounterplanningTask:
    return bundle_to_task(fig3_bundle())

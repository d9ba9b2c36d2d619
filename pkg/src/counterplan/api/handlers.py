"""Service handlers: one function per endpoint, shared by HTTP and CLI."""
from __future__ import annotations

import math

from .. import __version__, bench
from ..bundles import Bundle
from ..counterplanning import AlgorithmConfig, CounterplanningError
from ..generators import GenerationError, GeneratorConfig, bundle_to_task, generate
from ..model import NOOP, plan_from_text
from ..planner import SearchBudget, solve_optimal
from ..simulator import run_episode, validate_counterplan
from . import schemas as S


class HandlerError(Exception):
    """User-level error (bad input); maps to HTTP 422 / CLI usage exit."""


class TaskFailure(Exception):
    """The request was well-formed but the task could not be completed."""


def _to_bundle(m: S.BundleModel) -> Bundle:
    return Bundle(m.domain_text, m.seeker_text, m.preventer_text,
                  list(m.candidate_lines), m.truth_index, m.name)


def _from_bundle(b: Bundle) -> S.BundleModel:
    return S.BundleModel(
        domain_text=b.domain_text, seeker_text=b.seeker_text,
        preventer_text=b.preventer_text, candidate_lines=list(b.candidate_lines),
        truth_index=b.truth_index, name=b.name)


def _budget(m: S.BudgetModel) -> SearchBudget:
    return SearchBudget(m.max_nodes, m.max_seconds)


def health() -> S.HealthResponse:
    return S.HealthResponse(status="ok", version=__version__)


def generate_bundle(req: S.GenerateRequest) -> S.GenerateResponse:
    cfg = GeneratorConfig(
        domain=req.domain, seed=req.seed, grid_side=req.grid_side,
        obstacle_fraction=req.obstacle_fraction, booths=req.booths,
        candidate_goals=req.candidate_goals, blocks=req.blocks,
        rooms=req.rooms, words=req.words, word_min=req.word_min,
        word_max=req.word_max)
    try:
        bundle = generate(cfg)
    except GenerationError as exc:
        raise TaskFailure(str(exc)) from exc
    return S.GenerateResponse(bundle=_from_bundle(bundle))


def run_episode_handler(req: S.EpisodeRequest) -> S.EpisodeResponse:
    bundle = _to_bundle(req.bundle)
    if bundle.truth_index is None:
        raise HandlerError("episode needs a bundle with a truth index")
    try:
        C = bundle_to_task(bundle)
    except Exception as exc:
        raise HandlerError(f"bundle does not ground: {exc}") from exc
    budget = _budget(req.budget)
    seek = solve_optimal(C.seeker_task_for(C.true_goal_index), budget,
                         C.seek.heuristic)
    if not seek.solved:
        raise TaskFailure(f"no seeker plan for the true goal ({seek.status})")
    try:
        acfg = AlgorithmConfig(mode=req.algorithm, strategy=req.strategy,
                               seed=req.seed, search_budget=budget)
    except CounterplanningError as exc:
        raise HandlerError(str(exc)) from exc
    trace, metrics = run_episode(C, seek.plan, acfg)
    return S.EpisodeResponse(
        seeker_plan=[a.name for a in seek.plan],
        prev_plan=[a.name for a in trace.prev_plan],
        anticipatory_prefix=[a.name for a in trace.anticipatory_prefix],
        counterplan=None if trace.counterplan is None
        else [a.name for a in trace.counterplan],
        stopped=trace.stopped,
        metrics=S.MetricsModel(
            E=metrics.blocked, ratio_seek=metrics.seek_ratio,
            len_prev=metrics.prev_len,
            ratio_anticipatory=metrics.anticipatory_ratio,
            time_avg_s=metrics.time_avg_s, valid=metrics.valid,
            status=metrics.status),
        trace_jsonl=trace.to_jsonl(),
    )


def run_suite_handler(req: S.SuiteRequest) -> S.SuiteResponse:
    gen = GeneratorConfig(
        grid_side=req.grid_side, obstacle_fraction=req.obstacle_fraction,
        booths=req.booths, candidate_goals=req.candidate_goals,
        blocks=req.blocks, rooms=req.rooms, words=req.words,
        word_min=req.word_min, word_max=req.word_max)
    cfg = bench.SuiteConfig(
        domains=list(req.domains), algorithms=list(req.algorithms),
        n_tasks=req.n_tasks, seed=req.seed, strategy=req.strategy,
        generator=gen, search_budget=_budget(req.budget),
        workers=req.workers)
    try:
        suite = bench.run_suite(cfg)
    except bench.BenchError as exc:
        raise HandlerError(str(exc)) from exc
    agg = suite.aggregates()
    results = []
    for (domain, alg) in sorted(agg):
        cells = {}
        for metric, (mean, std, n) in agg[(domain, alg)].items():
            cells[metric] = S.AggregateCell(
                mean=None if math.isnan(mean) else mean,
                std=None if math.isnan(std) else std, n=n)
        results.append(S.SuiteResultRow(domain=domain, algorithm=alg,
                                        metrics=cells))
    return S.SuiteResponse(
        results=results, failures=suite.failures,
        episode_csv=bench.episode_csv(suite),
        markdown=bench.report(suite, "markdown"))


def validate_handler(req: S.ValidateRequest) -> S.ValidateResponse:
    bundle = _to_bundle(req.bundle)
    try:
        C = bundle_to_task(bundle)
    except Exception as exc:
        raise HandlerError(f"bundle does not ground: {exc}") from exc
    if bundle.truth_index is None:
        raise HandlerError("validation needs the truth file to derive the seeker plan")
    try:
        plan = plan_from_text(req.plan_text, C.prev.task.action_by_name)
    except Exception as exc:
        raise HandlerError(f"bad plan file: {exc}") from exc
    budget = _budget(req.budget)
    seek = solve_optimal(C.seeker_task_for(C.true_goal_index), budget,
                         C.seek.heuristic)
    if not seek.solved:
        raise TaskFailure(f"no seeker plan for the true goal ({seek.status})")
    prev_u = [C.prev.to_union_action(a) for a in plan]
    seek_u = [C.seek.to_union_action(a) for a in seek.plan]
    if req.goals is None:
        goals = list(C.candidates_seek)
    else:
        if not all(0 <= i < len(C.candidates_seek) for i in req.goals):
            raise HandlerError("goal index out of range")
        goals = [C.candidates_seek[i] for i in req.goals]
    verdict = validate_counterplan(
        C.seek.task, C.project_seek, C.composite_init,
        prev_u, seek_u, goals, budget)
    if verdict is None:
        detail = "indeterminate: a reachability search hit its budget"
    elif verdict:
        detail = "valid: every candidate goal is unreachable after joint execution"
    else:
        detail = "invalid: some candidate goal remains reachable"
    return S.ValidateResponse(valid=verdict, detail=detail)

"""Experiment harness: seeded suites over generated counterplanning tasks,
aggregate reporting in the evaluation-protocol shape, and per-episode rows.

Aggregation rule: %E averages over every generated task (failures score 0);
the other metrics average only over tasks where the algorithm's counterplan
was valid. Standard deviations are population deviations. Reports are
deterministic given a seed, up to wall-clock timing columns.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, replace
from multiprocessing import Pool
from typing import Dict, List, Optional, Sequence, Tuple

from .counterplanning import MODES, AlgorithmConfig
from .generators import GenerationError, GeneratorConfig, bundle_to_task, generate
from .planner import SearchBudget, solve_optimal
from .simulator import METRICS_CSV_HEADER, Metrics, run_episode

WORKERS_ENV = "COUNTERPLAN_WORKERS"

DEFAULT_ALGORITHMS = list(MODES)

METRIC_COLUMNS = ("E", "ratio_seek", "len_prev", "ratio_anticipatory", "time_avg_s")


class BenchError(Exception):
    pass


@dataclass
class SuiteConfig:
    domains: List[str] = field(default_factory=lambda: ["police-control"])
    algorithms: List[str] = field(default_factory=lambda: list(DEFAULT_ALGORITHMS))
    n_tasks: int = 50
    seed: int = 0
    strategy: str = "closest-to-seek"
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    search_budget: SearchBudget = field(default_factory=lambda: SearchBudget(300_000, 600.0))
    subgraph_budget: SearchBudget = field(default_factory=lambda: SearchBudget(150_000, 600.0))
    workers: Optional[int] = None

    def resolve_workers(self) -> int:
        if self.workers is not None:
            return max(1, self.workers)
        env = os.environ.get(WORKERS_ENV)
        if env:
            return max(1, int(env))
        return max(1, (os.cpu_count() or 1) - 1)


@dataclass
class EpisodeRow:
    task_id: str
    domain: str
    algorithm: str
    metrics: Optional[Metrics]
    error: str = ""

    def csv_row(self) -> str:
        if self.metrics is None:
            return f"{self.task_id},{self.algorithm},,,,,,error"
        return self.metrics.csv_row(self.task_id, self.algorithm)


@dataclass
class SuiteReport:
    config_summary: Dict
    rows: List[EpisodeRow]
    failures: Dict[str, int]

    def aggregates(self) -> Dict[Tuple[str, str], Dict[str, Tuple[float, float, int]]]:
        """(domain, algorithm) -> metric -> (mean, population std, n)."""
        out: Dict[Tuple[str, str], Dict[str, Tuple[float, float, int]]] = {}
        groups: Dict[Tuple[str, str], List[EpisodeRow]] = {}
        for row in self.rows:
            groups.setdefault((row.domain, row.algorithm), []).append(row)
        for key, rows in groups.items():
            cols: Dict[str, List[float]] = {c: [] for c in METRIC_COLUMNS}
            for r in rows:
                m = r.metrics
                cols["E"].append(m.blocked if m else 0.0)
                if m and m.valid:
                    if m.seek_ratio is not None:
                        cols["ratio_seek"].append(m.seek_ratio)
                    if m.prev_len is not None:
                        cols["len_prev"].append(float(m.prev_len))
                    if m.anticipatory_ratio is not None:
                        cols["ratio_anticipatory"].append(m.anticipatory_ratio)
                if m:
                    cols["time_avg_s"].append(m.time_avg_s)
            out[key] = {c: _mean_std(v) for c, v in cols.items()}
        return out

    def mean_e(self, domain: str, algorithm: str) -> float:
        agg = self.aggregates().get((domain, algorithm))
        return agg["E"][0] if agg else 0.0


def _mean_std(values: List[float]) -> Tuple[float, float, int]:
    n = len(values)
    if n == 0:
        return (float("nan"), float("nan"), 0)
    mean = sum(values) / n
    var = sum((v - mean) ** 2 for v in values) / n
    return (mean, math.sqrt(var), n)


def _run_one_task(args) -> List[EpisodeRow]:
    domain, index, cfg_dict = args
    cfg = _suite_from_dict(cfg_dict)
    gen_cfg = replace(cfg.generator, domain=domain, seed=cfg.seed + index)
    task_id = f"{domain}-{index:04d}"
    try:
        bundle = generate(gen_cfg)
        C = bundle_to_task(bundle)
        seek = solve_optimal(C.seeker_task_for(C.true_goal_index),
                             cfg.search_budget, C.seek.heuristic)
        if not seek.solved:
            raise BenchError(f"seeker plan search failed: {seek.status}")
    except Exception as exc:
        return [EpisodeRow(task_id, domain, alg, None, error=str(exc))
                for alg in cfg.algorithms]

    rows = []
    for alg in cfg.algorithms:
        acfg = AlgorithmConfig(
            mode=alg, strategy=cfg.strategy, seed=cfg.seed + index,
            search_budget=cfg.search_budget, subgraph_budget=cfg.subgraph_budget)
        try:
            _, metrics = run_episode(C, seek.plan, acfg)
            rows.append(EpisodeRow(task_id, domain, alg, metrics))
        except Exception as exc:
            rows.append(EpisodeRow(task_id, domain, alg, None, error=str(exc)))
    return rows


def _suite_to_dict(cfg: SuiteConfig) -> Dict:
    gen = {k: v for k, v in cfg.generator.__dict__.items()
           if k != "check_budget"}
    return {
        "domains": cfg.domains, "algorithms": cfg.algorithms,
        "n_tasks": cfg.n_tasks, "seed": cfg.seed, "strategy": cfg.strategy,
        "generator": gen,
        "search_budget": (cfg.search_budget.max_nodes, cfg.search_budget.max_seconds),
        "subgraph_budget": (cfg.subgraph_budget.max_nodes, cfg.subgraph_budget.max_seconds),
    }


def _suite_from_dict(d: Dict) -> SuiteConfig:
    gen = d["generator"].copy()
    gen.pop("check_budget", None)
    return SuiteConfig(
        domains=d["domains"], algorithms=d["algorithms"], n_tasks=d["n_tasks"],
        seed=d["seed"], strategy=d["strategy"],
        generator=GeneratorConfig(**gen),
        search_budget=SearchBudget(*d["search_budget"]),
        subgraph_budget=SearchBudget(*d["subgraph_budget"]),
    )


def run_suite(cfg: SuiteConfig) -> SuiteReport:
    """Generate n tasks per domain and run every algorithm on each.

    Tasks are independent and may run across worker processes; per-task seeds
    depend only on the suite seed and task index, so scheduling cannot change
    the (non-timing) results. Per-task failures are recorded, never fatal.
    """
    for alg in cfg.algorithms:
        if alg not in MODES:
            raise BenchError(f"unknown algorithm: {alg}")
    cfg_dict = _suite_to_dict(cfg)
    jobs = [(domain, i, cfg_dict)
            for domain in cfg.domains for i in range(cfg.n_tasks)]
    workers = cfg.resolve_workers()
    if workers > 1 and len(jobs) > 1:
        with Pool(workers) as pool:
            nested = pool.map(_run_one_task, jobs)
    else:
        nested = [_run_one_task(j) for j in jobs]
    rows = [row for group in nested for row in group]
    failures: Dict[str, int] = {}
    for r in rows:
        if r.error:
            key = r.error.split(":")[0][:60]
            failures[key] = failures.get(key, 0) + 1
    return SuiteReport(cfg_dict, rows, failures)


# ---------------------------------------------------------------------------
# reporting
# ---------------------------------------------------------------------------

def report(suite: SuiteReport, fmt: str = "markdown") -> str:
    if fmt == "csv":
        return _report_csv(suite)
    if fmt == "json":
        return _report_json(suite)
    if fmt in ("markdown", "markdown-table", "md"):
        return _report_markdown(suite)
    raise BenchError(f"unknown report format: {fmt}")


def _sorted_keys(suite: SuiteReport):
    return sorted(suite.aggregates().keys())


def _report_csv(suite: SuiteReport) -> str:
    agg = suite.aggregates()
    lines = ["domain,algorithm," + ",".join(
        f"{c}_mean,{c}_std,{c}_n" for c in METRIC_COLUMNS)]
    for key in sorted(agg):
        domain, alg = key
        cells = [domain, alg]
        for c in METRIC_COLUMNS:
            mean, std, n = agg[key][c]
            cells.extend([_num(mean), _num(std), str(n)])
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _num(v: float) -> str:
    if isinstance(v, float) and math.isnan(v):
        return ""
    return f"{v:.4f}"


def _report_json(suite: SuiteReport) -> str:
    agg = suite.aggregates()
    payload = {
        "config": suite.config_summary,
        "failures": suite.failures,
        "results": [
            {
                "domain": d, "algorithm": a,
                **{c: {"mean": _jnum(agg[(d, a)][c][0]),
                       "std": _jnum(agg[(d, a)][c][1]),
                       "n": agg[(d, a)][c][2]}
                   for c in METRIC_COLUMNS},
            }
            for (d, a) in sorted(agg)
        ],
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _jnum(v: float):
    return None if (isinstance(v, float) and math.isnan(v)) else round(v, 6)


MD_HEADERS = ("%E", "%|pi_seek|", "|pi_prev|", "%|pi_prev|_a", "t_C")


def _report_markdown(suite: SuiteReport) -> str:
    agg = suite.aggregates()
    lines = ["| Domain | Algorithm | " + " | ".join(MD_HEADERS) + " |",
             "|---|---|" + "---|" * len(MD_HEADERS)]
    for key in sorted(agg):
        domain, alg = key
        cells = []
        for c in METRIC_COLUMNS:
            mean, std, n = agg[key][c]
            if n == 0 or (isinstance(mean, float) and math.isnan(mean)):
                cells.append("-")
            else:
                cells.append(f"{mean:.2f} +- {std:.2f}")
        lines.append(f"| {domain} | {alg} | " + " | ".join(cells) + " |")
    if suite.failures:
        lines.append("")
        lines.append("Failures: " + ", ".join(
            f"{k} x{v}" for k, v in sorted(suite.failures.items())))
    return "\n".join(lines) + "\n"


def episode_csv(suite: SuiteReport) -> str:
    lines = [METRICS_CSV_HEADER]
    lines.extend(row.csv_row() for row in suite.rows)
    return "\n".join(lines) + "\n"

"""Command-line client for the counterplanning service.

Subcommands map one-to-one onto the HTTP endpoints and share their
request/response models; by default they call the handlers in-process, with
``--server URL`` they post to a running instance instead.

Exit codes: 0 ok, 1 usage error, 2 task failure, 3 budget exhausted.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional

from . import bench as bench_mod
from .api import handlers
from .api import schemas as S
from .bundles import Bundle, BundleError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_TASK = 2
EXIT_BUDGET = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


class _Client:
    """Dispatches a request model either in-process or over HTTP."""

    def __init__(self, server: Optional[str]):
        self.server = server.rstrip("/") if server else None

    def call(self, endpoint: str, request, local_fn, response_model):
        if self.server is None:
            return local_fn(request)
        import httpx

        resp = httpx.post(f"{self.server}/{endpoint}",
                          json=request.model_dump(), timeout=None)
        if resp.status_code == 422:
            raise handlers.HandlerError(_detail(resp))
        if resp.status_code == 409:
            raise handlers.TaskFailure(_detail(resp))
        resp.raise_for_status()
        return response_model.model_validate(resp.json())


def _detail(resp) -> str:
    try:
        return str(resp.json().get("detail"))
    except Exception:
        return resp.text


def _bundle_model(directory: str) -> S.BundleModel:
    b = Bundle.load(directory)
    return S.BundleModel(
        domain_text=b.domain_text, seeker_text=b.seeker_text,
        preventer_text=b.preventer_text, candidate_lines=b.candidate_lines,
        truth_index=b.truth_index, name=b.name)


def _budget_from(args) -> S.BudgetModel:
    return S.BudgetModel(max_nodes=args.budget_nodes,
                         max_seconds=args.budget_seconds)


def _add_budget_flags(p):
    p.add_argument("--budget-nodes", type=int, default=1_000_000,
                   help="node cap per search")
    p.add_argument("--budget-seconds", type=float, default=600.0,
                   help="wall-clock cap per search, seconds")


def build_parser() -> _Parser:
    p = _Parser(prog="counterplan",
                description="reactive and anticipatory counterplanning")
    p.add_argument("--server", default=None,
                   help="base URL of a running service (default: in-process)")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a task bundle")
    g.add_argument("--domain", default="police-control",
                   choices=["police-control", "painted-blocks-words", "fig3"])
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--grid-side", type=int, default=8)
    g.add_argument("--obstacles", type=float, default=0.25)
    g.add_argument("--booths", type=int, default=10)
    g.add_argument("--goals", type=int, default=3)
    g.add_argument("--blocks", type=int, default=8)
    g.add_argument("--rooms", type=int, default=5)
    g.add_argument("--words", type=int, default=5)
    g.add_argument("--out", required=True, help="bundle directory to write")

    r = sub.add_parser("run", help="run one episode on a bundle")
    r.add_argument("bundle", help="bundle directory")
    r.add_argument("--algorithm", default="adicp",
                   choices=["dicp", "adicp", "random-adicp", "random-goal-adicp"])
    r.add_argument("--strategy", default="closest-to-seek",
                   choices=["closest-to-seek", "closest-to-prev"])
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--trace", default=None, help="write the episode trace (JSONL)")
    _add_budget_flags(r)

    s = sub.add_parser("suite", help="run a benchmark suite")
    s.add_argument("--domain", action="append", dest="domains",
                   choices=["police-control", "painted-blocks-words"],
                   help="repeatable; default police-control")
    s.add_argument("--n", type=int, default=50)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--algorithms", default="dicp,adicp,random-adicp,random-goal-adicp")
    s.add_argument("--strategy", default="closest-to-seek",
                   choices=["closest-to-seek", "closest-to-prev"])
    s.add_argument("--grid-side", type=int, default=8)
    s.add_argument("--obstacles", type=float, default=0.25)
    s.add_argument("--booths", type=int, default=10)
    s.add_argument("--goals", type=int, default=3)
    s.add_argument("--blocks", type=int, default=8)
    s.add_argument("--rooms", type=int, default=5)
    s.add_argument("--words", type=int, default=5)
    s.add_argument("--format", default="markdown", choices=["markdown", "csv", "json"])
    s.add_argument("--out", default=None, help="write the aggregate report here")
    s.add_argument("--episodes-out", default=None, help="write per-episode CSV here")
    s.add_argument("--workers", type=int, default=None,
                   help=f"worker processes (or ${bench_mod.WORKERS_ENV})")
    _add_budget_flags(s)
    s.set_defaults(budget_nodes=300_000, budget_seconds=600.0)

    v = sub.add_parser("validate", help="check a counterplan file against a bundle")
    v.add_argument("bundle", help="bundle directory")
    v.add_argument("plan", help="counterplan file (one action per line)")
    v.add_argument("--goals", default=None,
                   help="comma-separated candidate indices to block (default all)")
    _add_budget_flags(v)

    serve = sub.add_parser("serve", help="start the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return p


def cmd_gen(args, client: _Client) -> int:
    if args.domain == "fig3":
        from .generators import fig3_bundle

        fig3_bundle().save(args.out)
        print(f"wrote walkthrough fixture bundle to {args.out}")
        return EXIT_OK
    req = S.GenerateRequest(
        domain=args.domain, seed=args.seed, grid_side=args.grid_side,
        obstacle_fraction=args.obstacles, booths=args.booths,
        candidate_goals=args.goals, blocks=args.blocks, rooms=args.rooms,
        words=args.words)
    resp = client.call("generate", req, handlers.generate_bundle,
                       S.GenerateResponse)
    m = resp.bundle
    Bundle(m.domain_text, m.seeker_text, m.preventer_text,
           list(m.candidate_lines), m.truth_index, m.name).save(args.out)
    print(f"wrote {args.domain} bundle (seed {args.seed}) to {args.out}")
    return EXIT_OK


def cmd_run(args, client: _Client) -> int:
    req = S.EpisodeRequest(bundle=_bundle_model(args.bundle),
                           algorithm=args.algorithm, strategy=args.strategy,
                           seed=args.seed, budget=_budget_from(args))
    resp = client.call("episode", req, handlers.run_episode_handler,
                       S.EpisodeResponse)
    print(json.dumps({
        "algorithm": args.algorithm,
        "stopped": resp.stopped,
        "prev_plan": resp.prev_plan,
        "counterplan": resp.counterplan,
        "metrics": resp.metrics.model_dump(),
    }, indent=2))
    if args.trace:
        with open(args.trace, "w") as fh:
            fh.write(resp.trace_jsonl)
    if resp.metrics.status == "budget":
        return EXIT_BUDGET
    return EXIT_OK


def cmd_suite(args, client: _Client) -> int:
    req = S.SuiteRequest(
        domains=args.domains or ["police-control"],
        algorithms=[a.strip() for a in args.algorithms.split(",") if a.strip()],
        n_tasks=args.n, seed=args.seed, strategy=args.strategy,
        grid_side=args.grid_side, obstacle_fraction=args.obstacles,
        booths=args.booths, candidate_goals=args.goals, blocks=args.blocks,
        rooms=args.rooms, words=args.words, budget=_budget_from(args),
        workers=args.workers)
    resp = client.call("suite", req, handlers.run_suite_handler, S.SuiteResponse)
    if args.format == "markdown":
        text = resp.markdown
    elif args.format == "csv":
        lines = ["domain,algorithm," + ",".join(
            f"{c}_mean,{c}_std,{c}_n" for c in bench_mod.METRIC_COLUMNS)]
        for row in resp.results:
            cells = [row.domain, row.algorithm]
            for c in bench_mod.METRIC_COLUMNS:
                cell = row.metrics[c]
                cells.extend(["" if cell.mean is None else f"{cell.mean:.4f}",
                              "" if cell.std is None else f"{cell.std:.4f}",
                              str(cell.n)])
            lines.append(",".join(cells))
        text = "\n".join(lines) + "\n"
    else:
        text = json.dumps({"results": [r.model_dump() for r in resp.results],
                           "failures": resp.failures}, indent=2) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        print(f"wrote report to {args.out}")
    else:
        print(text, end="")
    if args.episodes_out:
        with open(args.episodes_out, "w") as fh:
            fh.write(resp.episode_csv)
        print(f"wrote per-episode metrics to {args.episodes_out}")
    return EXIT_OK


def cmd_validate(args, client: _Client) -> int:
    with open(args.plan) as fh:
        plan_text = fh.read()
    goals = None
    if args.goals:
        goals = [int(x) for x in args.goals.split(",") if x.strip()]
    req = S.ValidateRequest(bundle=_bundle_model(args.bundle),
                            plan_text=plan_text, budget=_budget_from(args),
                            goals=goals)
    resp = client.call("validate", req, handlers.validate_handler,
                       S.ValidateResponse)
    print(resp.detail)
    if resp.valid is None:
        return EXIT_BUDGET
    return EXIT_OK if resp.valid else EXIT_TASK


def cmd_serve(args) -> int:
    import uvicorn

    from .api import app

    uvicorn.run(app, host=args.host, port=args.port)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    client = _Client(args.server)
    try:
        if args.command == "gen":
            return cmd_gen(args, client)
        if args.command == "run":
            return cmd_run(args, client)
        if args.command == "suite":
            return cmd_suite(args, client)
        if args.command == "validate":
            return cmd_validate(args, client)
        if args.command == "serve":
            return cmd_serve(args)
        parser.error(f"unknown command {args.command}")
    except handlers.HandlerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except handlers.TaskFailure as exc:
        print(f"task failure: {exc}", file=sys.stderr)
        return EXIT_TASK
    except (FileNotFoundError, BundleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # pragma: no cover - final safety net
        print(f"unexpected failure: {exc}", file=sys.stderr)
        return EXIT_TASK
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

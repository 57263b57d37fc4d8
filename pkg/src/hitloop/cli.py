"""Command line front door: run simulations, analyze recorded runs, serve
the HTTP API (optionally pre-loaded with a freshly simulated demo cohort).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from datetime import date as Date
from datetime import timedelta
from pathlib import Path

from .simulate import ScenarioConfig, default_scenario, run_scenario

log = logging.getLogger(__name__)

DEMO_SPAN_DAYS = 12
DEMO_USERS = 6


def _cmd_simulate(args: argparse.Namespace) -> int:
    if args.config:
        config = ScenarioConfig.from_file(args.config)
        if args.seed is not None:
            config.master_seed = args.seed
    else:
        span_start = Date.fromisoformat(args.start)
        span = (span_start, span_start + timedelta(days=args.days - 1))
        config = default_scenario(
            n_enrolled=args.users,
            n_emitting=args.emitting if args.emitting is not None else min(args.users, 14),
            master_seed=args.seed if args.seed is not None else 0,
            span=span,
            feedback_enabled=args.feedback,
            detail=args.detail,
        )
    result = run_scenario(config, out_dir=args.out)
    print(f"digest  {result.digest}")
    for key in sorted(result.counts):
        print(f"{key:16s}{result.counts[key]}")
    if result.out_dir:
        print(f"outputs {result.out_dir}")
    return 0


def _cmd_analyze(args: argparse.Namespace) -> int:
    from .analysis.pipeline import run_report

    summary = run_report(
        events_path=args.events,
        out_dir=args.out,
        covid_path=args.covid,
        timeline_path=args.timeline,
        categories_path=args.categories,
        lags=tuple(int(x) for x in args.lags.split(",")),
    )
    print(json.dumps(summary, indent=2, sort_keys=True))
    print(f"outputs {args.out}")
    return 0


def build_demo_platform(seed: int = 7, span_days: int = DEMO_SPAN_DAYS, users: int = DEMO_USERS):
    """Simulate a small recent cohort and keep its platform live, clock
    frozen where the run ended, so every read endpoint has data and the
    questionnaire flow can continue from current pending prompts."""
    span_end = Date(2021, 5, 9)
    span = (span_end - timedelta(days=span_days - 1), span_end)
    config = default_scenario(
        n_enrolled=users,
        n_emitting=users,
        master_seed=seed,
        span=span,
        feedback_enabled=False,
        detail="full",
    )
    result = run_scenario(config)
    result.platform.tap = None
    return result.platform


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .http_api import create_app
    from .platform import build_platform

    if args.demo:
        platform = build_demo_platform(seed=args.seed if args.seed is not None else 7)
    else:
        platform = build_platform(persist_dir=args.state_dir)
    app = create_app(platform)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="hitloop")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run a deterministic virtual cohort")
    p_sim.add_argument("--config", help="scenario config JSON (overrides the built-in default)")
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.add_argument("--out", help="output directory for the event log and digests")
    p_sim.add_argument("--start", default="2021-02-01", help="span start date (default scenario only)")
    p_sim.add_argument("--days", type=int, default=102, help="span length in days")
    p_sim.add_argument("--users", type=int, default=19, help="enrolled participants")
    p_sim.add_argument("--emitting", type=int, default=None, help="participants that actually emit")
    p_sim.add_argument("--feedback", action="store_true", help="run the feedback loop during the span")
    p_sim.add_argument("--detail", choices=("full", "light"), default="full")
    p_sim.set_defaults(func=_cmd_simulate)

    p_ana = sub.add_parser("analyze", help="produce the offline report for a recorded run")
    p_ana.add_argument("--events", required=True, help="events.jsonl from a run")
    p_ana.add_argument("--out", required=True, help="report output directory")
    p_ana.add_argument("--covid", help="daily epidemic dataset CSV (defaults to the bundled one)")
    p_ana.add_argument("--timeline", help="public events CSV (defaults to the bundled one)")
    p_ana.add_argument("--categories", help="app category CSV (defaults to the bundled one)")
    p_ana.add_argument("--lags", default="0,1,2,3,4", help="comma-separated day lags")
    p_ana.set_defaults(func=_cmd_analyze)

    p_srv = sub.add_parser("serve", help="serve the HTTP API")
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument("--port", type=int, default=8000)
    p_srv.add_argument("--demo", action="store_true",
                       help="pre-load a simulated cohort and freeze the clock at its end")
    p_srv.add_argument("--seed", type=int, default=None)
    p_srv.add_argument("--state-dir", default=None, help="persistence directory (non-demo mode)")
    p_srv.set_defaults(func=_cmd_serve)

    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry points.

Subcommands:

* ``validate`` - parse a spec and check completeness, determinism, and
  error absorbance; exit 0 only if all three hold.
* ``analyze`` - print coreachability, distance layers, and (with
  ``--game``) the winning/cooperative hierarchy as JSON.
* ``run`` - drive a SUT with one test algorithm for a full campaign and
  write a report (JSON plus CSV and figure alongside).
* ``table`` - run the whole algorithm matrix and write a comparison
  report.
* ``serve`` - expose a builtin SUT on stdin/stdout via the wire protocol.
* ``spec`` - print a builtin spec in the text format.

Exit codes: 0 success criterion met, 1 campaign finished without success,
2 usage or spec error, 3 SUT transport failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

from . import catalog
from .analysis import coreach_inp, reward_layers
from .automaton import SELF_LOOP, TO_ERROR, complete, run_trace, validate
from .errors import ReachtestError, SpecError, TransportError
from .game import greedy_strategy
from .specfile import serialize_spec
from .sut import serve_session
from .testers import (
    COVERING,
    CampaignReport,
    TesterConfig,
    build_context,
    needs_greedy,
    run_campaign,
)

PAPER_ATTEMPTS = 50
PAPER_RUNS = 10_000
DESK_ATTEMPTS = 10
DESK_RUNS = 3_000


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TransportError as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return 3
    except ReachtestError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reachtest",
        description="Online test synthesis against safety-automaton requirements",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a spec file")
    p.add_argument("spec", help="spec file path or builtin name")
    p.add_argument(
        "--completion",
        choices=[TO_ERROR, SELF_LOOP],
        help="complete the automaton with this policy before validating",
    )
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("analyze", help="print analysis artifacts as JSON")
    _spec_args(p)
    p.add_argument("--game", action="store_true", help="include the greedy hierarchy")
    p.add_argument("--strategy-out", help="also write the greedy strategy to a file")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("run", help="run one algorithm campaign against a SUT")
    _spec_args(p)
    _campaign_args(p)
    p.add_argument("--algo", default="uniform", dest="algorithm",
                   choices=["uniform", "greedy", "eps-greedy", "mcts", "greedy-mcts"])
    p.add_argument("--greedy-tree", action=argparse.BooleanOptionalAction, default=True,
                   help="restrict the tree policy to greedy inputs for the first M visits")
    p.add_argument("--greedy-rollout", action=argparse.BooleanOptionalAction, default=True,
                   help="use epsilon-greedy rollouts instead of uniform ones")
    p.add_argument("--strategy", help="JSON strategy file overriding the computed one")
    p.add_argument("--report", help="report JSON path (CSV and PNG written alongside)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("table", help="run the full algorithm comparison matrix")
    _spec_args(p)
    _campaign_args(p)
    p.add_argument("--out", default="reports", help="output directory")
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("serve", help="serve a builtin SUT over stdin/stdout")
    p.add_argument("sut", help="builtin SUT URI, e.g. builtin:passageway")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("spec", help="print a builtin spec in the text format")
    p.add_argument("name", help="builtin spec name, e.g. passageway or fig1")
    p.set_defaults(func=cmd_spec)
    return parser


def _spec_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--spec", required=True, help="spec file path or builtin name")
    p.add_argument("--objective", help="objective name (defaults to the only one)")
    p.add_argument(
        "--completion",
        choices=[TO_ERROR, SELF_LOOP, "none"],
        default=TO_ERROR,
        help="policy used to complete an incomplete spec (default: to-error)",
    )


def _campaign_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sut", required=True, help="builtin:<name> or exec:<command>")
    p.add_argument("--K", type=int, default=250, dest="max_steps",
                   help="step bound per run")
    p.add_argument("--runs", type=int, default=None, help="runs per attempt")
    p.add_argument("--attempts", type=int, default=None)
    p.add_argument("--epsilon", type=float, default=0.25)
    p.add_argument("--gamma", type=float, default=0.99)
    p.add_argument("--M", type=int, default=30, dest="greedy_visits",
                   help="greedy-visit bound per tree node")
    p.add_argument("--c", type=float, default=None, dest="uct_c",
                   help="UCT constant (negative; default -0.02)")
    p.add_argument("--reward", choices=["last", "discounted"], default="discounted")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1, help="parallel attempts")
    p.add_argument("--continue-after-error", action="store_true")
    p.add_argument("--paper-scale", action="store_true",
                   help=f"use {PAPER_ATTEMPTS} attempts x {PAPER_RUNS} runs")


def _load_spec(args):
    a = catalog.resolve_spec(args.spec)
    policy = getattr(args, "completion", TO_ERROR)
    if policy and policy != "none":
        report = validate(a)
        if not report.complete:
            a = complete(a, policy)
            print(f"note: spec completed with policy {policy}", file=sys.stderr)
    return a


def _pick_objective(a, args) -> str:
    if args.objective:
        if args.objective not in a.objectives:
            raise SpecError(
                f"unknown objective {args.objective!r}; declared: "
                f"{sorted(a.objectives) or 'none'}"
            )
        return args.objective
    if len(a.objectives) == 1:
        return next(iter(a.objectives))
    raise SpecError(
        f"spec declares {len(a.objectives)} objectives; pick one with --objective "
        f"from {sorted(a.objectives)}"
    )


def cmd_validate(args) -> int:
    a = catalog.resolve_spec(args.spec)
    if args.completion:
        a = complete(a, args.completion)
    report = validate(a)
    print(f"complete:          {report.complete}")
    for state, bits in report.incomplete_witnesses[:10]:
        print(f"  missing: state {state} on {bits}")
    print(f"deterministic:     {report.deterministic}")
    for state, bits, t1, t2 in report.nondet_witnesses[:10]:
        print(f"  overlap: state {state} on {bits} -> {t1} and {t2}")
    print(f"errors absorbing:  {report.errors_absorbing}")
    for state, target in report.absorbing_witnesses[:10]:
        print(f"  escape: error state {state} can reach {target}")
    return 0 if report.ok else 1


def cmd_analyze(args) -> int:
    a = _load_spec(args)
    objective_name = _pick_objective(a, args)
    objective = a.objectives[objective_name]
    ab = a.alphabet
    ci = coreach_inp(a, objective)
    layers = reward_layers(a, objective)
    doc = {
        "alphabet": {"inputs": list(ab.inputs), "outputs": list(ab.outputs)},
        "objective": objective_name,
        "objective_states": sorted(objective),
        "coreach": sorted(ci.coreach),
        "layers": [sorted(layer) for layer in layers.layers],
        "sink": sorted(layers.sink),
        "coreach_inputs": {
            s: [ab.format_input(v) for v in vals]
            for s, vals in sorted(ci.allowed.items())
        },
    }
    if args.game:
        ga = greedy_strategy(a, objective)
        doc["winning_levels"] = [sorted(level) for level in ga.levels]
        doc["cooperative_frontiers"] = [sorted(f) for f in ga.frontiers]
        doc["rank"] = {s: ga.rank[s] for s in sorted(ga.rank)}
        doc["greedy_strategy"] = {
            s: [ab.format_input(v) for v in ga.strategy[s]]
            for s in sorted(ga.strategy.choices)
        }
        doc["strategy_mode"] = {s: ga.mode[s] for s in sorted(ga.mode)}
        if args.strategy_out:
            with open(args.strategy_out, "w", encoding="utf-8") as fh:
                json.dump(doc["greedy_strategy"], fh, indent=2, sort_keys=True)
                fh.write("\n")
    print(json.dumps(doc, indent=2))
    return 0


def _config_from_args(args) -> TesterConfig:
    attempts = args.attempts
    runs = args.runs
    if args.paper_scale:
        attempts = attempts if attempts is not None else PAPER_ATTEMPTS
        runs = runs if runs is not None else PAPER_RUNS
    else:
        attempts = attempts if attempts is not None else DESK_ATTEMPTS
        runs = runs if runs is not None else DESK_RUNS
    cfg = TesterConfig(
        algorithm=getattr(args, "algorithm", "uniform"),
        max_steps=args.max_steps,
        runs=runs,
        attempts=attempts,
        epsilon=args.epsilon,
        gamma=args.gamma,
        greedy_visits=args.greedy_visits,
        reward_mode=args.reward,
        seed=args.seed,
        greedy_tree=getattr(args, "greedy_tree", True),
        greedy_rollout=getattr(args, "greedy_rollout", True),
        continue_after_error=args.continue_after_error,
    )
    if args.uct_c is not None:
        cfg = replace(cfg, uct_c=args.uct_c)
    return cfg


def _audit_campaign(a, ctx, report: CampaignReport) -> None:
    """Re-run every reported trace and confirm its verdict before writing."""
    ab = a.alphabet
    for attempt in report.attempts:
        if attempt.covering_trace is not None:
            end, _ = run_trace(a, [ab.parse_full(b) for b in attempt.covering_trace])
            if end not in ctx.objective:
                raise ReachtestError(
                    f"self-audit failed: covering trace replays to {end}"
                )
        for trace in attempt.error_traces:
            end, fails = run_trace(a, [ab.parse_full(b) for b in trace])
            if not fails:
                raise ReachtestError(
                    f"self-audit failed: error trace replays to {end}"
                )


def _campaign(args, cfg: TesterConfig) -> tuple:
    a = _load_spec(args)
    objective_name = _pick_objective(a, args)
    ctx = build_context(a, objective_name)
    factory = catalog.make_sut_factory(args.sut, a.alphabet)
    greedy = None
    if needs_greedy(cfg):
        strategy_file = getattr(args, "strategy", None)
        greedy = greedy_strategy(a, ctx.objective)
        if strategy_file:
            greedy = _override_strategy(greedy, strategy_file, a)
    completion = args.completion if args.completion != "none" else None
    report = run_campaign(
        ctx,
        factory,
        cfg,
        greedy=greedy,
        jobs=args.jobs,
        spec_source=args.spec,
        objective_name=objective_name,
        sut_uri=args.sut,
        completion=completion,
    )
    _audit_campaign(a, ctx, report)
    return a, ctx, report


def _override_strategy(greedy, path: str, a):
    from .game import Strategy

    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    choices = {
        state: tuple(sorted(a.alphabet.parse_input(b) for b in bits))
        for state, bits in doc.items()
    }
    return replace_strategy(greedy, Strategy(choices))


def replace_strategy(greedy, strategy):
    from dataclasses import replace as dc_replace

    return dc_replace(greedy, strategy=strategy)


def cmd_run(args) -> int:
    from . import report as reporting

    cfg = _config_from_args(args)
    a, ctx, campaign = _campaign(args, cfg)
    total_ms = sum(at.wall_time_ms for at in campaign.attempts)
    if args.report:
        os.makedirs(os.path.dirname(args.report) or ".", exist_ok=True)
        reporting.write_report(campaign, args.report)
        stem, _ = os.path.splitext(args.report)
        reporting.write_summary_csv([campaign], stem + ".csv")
        reporting.render_campaign_figure(campaign, stem + ".png")
    print(reporting.format_summary_table([campaign]))
    print(f"total wall time: {total_ms / 1000.0:.1f}s")
    return 0 if campaign.summary["successes"] > 0 else 1


MATRIX = (
    ("uniform", {}),
    ("eps-greedy", {}),
    ("mcts", {}),
    ("greedy-mcts", {"greedy_tree": False, "greedy_rollout": True}),
    ("greedy-mcts", {"greedy_tree": True, "greedy_rollout": True}),
)


def cmd_table(args) -> int:
    from . import report as reporting

    base = _config_from_args(args)
    campaigns = []
    for algorithm, overrides in MATRIX:
        cfg = replace(base, algorithm=algorithm, **overrides)
        _, _, campaign = _campaign(args, cfg)
        campaigns.append(campaign)
        print(f"{reporting.algorithm_label(campaign)}: "
              f"{campaign.summary['success_rate']:.0f}% success", file=sys.stderr)
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "table.json"), "w", encoding="utf-8") as fh:
        json.dump([reporting.campaign_to_dict(c) for c in campaigns], fh,
                  indent=2, sort_keys=True)
        fh.write("\n")
    reporting.write_summary_csv(campaigns, os.path.join(args.out, "table.csv"))
    reporting.render_matrix_figure(campaigns, os.path.join(args.out, "table.png"))
    print(reporting.format_summary_table(campaigns))
    return 0 if any(c.summary["successes"] for c in campaigns) else 1


def cmd_serve(args) -> int:
    factory = catalog.make_sut_factory(args.sut)
    with factory() as session:
        return serve_session(session)


def cmd_spec(args) -> int:
    a = catalog.load_builtin_spec(args.name)
    sys.stdout.write(serialize_spec(a))
    return 0


if __name__ == "__main__":
    sys.exit(main())

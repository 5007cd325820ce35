"""Command-line driver: check, run, trace, expand, fuzz.

Exit codes are a stable contract: 0 success, 1 validation error, 2 parse or
I/O failure, 3 stuck configuration, 4 budget exhausted, 5 confluence
divergence.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

from .engine import (
    Fifo,
    Lifo,
    Seeded,
    Strategy,
    confluence_probe,
    normalize,
    strategy_from_spec,
)
from .rules import (
    DEFAULT_ARITY_CAP,
    Analysis,
    analyze_rules,
)
from .surface import (
    SourceProgram,
    parse_program,
    render_configuration,
    render_equation,
    render_rule,
    render_trace,
)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_INPUT = 2
EXIT_STUCK = 3
EXIT_BUDGET = 4
EXIT_DIVERGENT = 5


def _print_diagnostics(diags) -> None:
    for d in diags:
        print(str(d), file=sys.stderr)


def _load(path: str) -> Optional[SourceProgram]:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        print(f"error: cannot read {path}: {exc}", file=sys.stderr)
        return None
    program = parse_program(text)
    if program.has_errors:
        _print_diagnostics(program.diagnostics)
        return None
    return program


def _analyze(program: SourceProgram, cap: int) -> Optional[Analysis]:
    analysis = analyze_rules(program.rules, program.symbols.values(), arity_cap=cap)
    _print_diagnostics(program.diagnostics)
    _print_diagnostics(analysis.diagnostics)
    if not analysis.ok:
        return None
    return analysis


def _strategy(spec: str) -> Strategy:
    try:
        return strategy_from_spec(spec)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def cmd_check(args) -> int:
    program = _load(args.input)
    if program is None:
        return EXIT_INPUT
    analysis = _analyze(program, args.max_arity)
    return EXIT_OK if analysis is not None else EXIT_VALIDATION


def _normalized(args, trace: bool):
    program = _load(args.input)
    if program is None:
        return None, EXIT_INPUT
    analysis = _analyze(program, args.max_arity)
    if analysis is None:
        return None, EXIT_VALIDATION
    if program.net is None:
        print("error: program declares no net to run", file=sys.stderr)
        return None, EXIT_VALIDATION
    assert analysis.table is not None
    outcome = normalize(
        program.net,
        analysis.table,
        args.strategy,
        budget=args.max_steps,
        trace=trace,
        supply=program.supply,
    )
    return outcome, EXIT_OK


_STATUS_EXIT = {"normal_form": EXIT_OK, "stuck": EXIT_STUCK, "budget_exhausted": EXIT_BUDGET}


def cmd_run(args) -> int:
    outcome, code = _normalized(args, trace=False)
    if outcome is None:
        return code
    print(render_configuration(outcome.final))
    if outcome.status == "stuck":
        for eq in outcome.stuck_equations:
            print(f"stuck: {render_equation(eq)}", file=sys.stderr)
    return _STATUS_EXIT[outcome.status]


def cmd_trace(args) -> int:
    outcome, code = _normalized(args, trace=True)
    if outcome is None:
        return code
    assert outcome.trace is not None
    if args.json:
        body = render_trace(outcome.trace, "jsonLines")
        if body:
            print(body)
        print(
            json.dumps(
                {
                    "status": outcome.status,
                    "steps": outcome.steps,
                    "final": render_configuration(outcome.final),
                }
            )
        )
    else:
        body = render_trace(outcome.trace, "text")
        if body:
            print(body)
        print(render_configuration(outcome.final))
    return _STATUS_EXIT[outcome.status]


def cmd_expand(args) -> int:
    program = _load(args.input)
    if program is None:
        return EXIT_INPUT
    analysis = analyze_rules(
        program.rules, program.symbols.values(), arity_cap=args.max_arity
    )
    _print_diagnostics(program.diagnostics)
    _print_diagnostics(analysis.diagnostics)
    # The expansion is printed whenever the pre-expansion checks pass, even
    # if the expanded set then fails the overlap check; seeing the expanded
    # rules is exactly what helps diagnose that failure.
    for rule in analysis.expanded_rules:
        origin = rule.origin if rule.origin.startswith("expanded-from") else "source"
        print(f"{render_rule(rule)}  # {rule.id}: {origin}")
    return EXIT_OK if analysis.ok else EXIT_VALIDATION


def cmd_fuzz(args) -> int:
    program = _load(args.input)
    if program is None:
        return EXIT_INPUT
    analysis = _analyze(program, args.max_arity)
    if analysis is None:
        return EXIT_VALIDATION
    if program.net is None:
        print("error: program declares no net to run", file=sys.stderr)
        return EXIT_VALIDATION
    assert analysis.table is not None
    strategies: list[Strategy] = [Fifo(), Lifo()]
    strategies.extend(Seeded(seed) for seed in range(args.seeds))
    report = confluence_probe(program.net, analysis.table, strategies, budget=args.max_steps)
    finished = report.terminated
    if not report.consistent:
        assert report.divergence is not None and report.traces is not None
        first, second = report.divergence
        print(
            f"divergence: strategy {first.strategy} reached "
            f"{render_configuration(first.canonical)} in {first.steps} step(s), "
            f"strategy {second.strategy} reached "
            f"{render_configuration(second.canonical)} in {second.steps} step(s)"
        )
        print(f"--- trace under {first.strategy}")
        print(render_trace(report.traces[0], "text"))
        print(f"--- trace under {second.strategy}")
        print(render_trace(report.traces[1], "text"))
        return EXIT_DIVERGENT
    if not finished:
        print(f"all {len(report.runs)} runs exhausted the step budget")
        return EXIT_BUDGET
    sample = finished[0]
    print(
        f"confluence: {len(report.runs)} strategies, {len(finished)} terminating, "
        f"all agree on {render_configuration(sample.canonical)} in {sample.steps} step(s)"
    )
    return EXIT_OK


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="inet",
        description="Validate, expand, and reduce interaction-net programs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, with_run_flags: bool = True) -> None:
        p.add_argument("input", help="path to a .inet program")
        p.add_argument(
            "--max-arity",
            type=int,
            default=DEFAULT_ARITY_CAP,
            help="cap on the arity used for variadic expansion",
        )
        if with_run_flags:
            p.add_argument("--max-steps", type=int, default=100_000)
            p.add_argument(
                "--strategy",
                type=_strategy,
                default=Fifo(),
                help="fifo | lifo | seed:<u64>",
            )

    p_check = sub.add_parser("check", help="validate a program")
    common(p_check, with_run_flags=False)
    p_check.set_defaults(handler=cmd_check)

    p_run = sub.add_parser("run", help="reduce the net to normal form")
    common(p_run)
    p_run.set_defaults(handler=cmd_run)

    p_trace = sub.add_parser("trace", help="reduce and emit every step")
    common(p_trace)
    p_trace.add_argument("--json", action="store_true", help="one JSON object per line")
    p_trace.set_defaults(handler=cmd_trace)

    p_expand = sub.add_parser("expand", help="print the rule set after variadic expansion")
    common(p_expand, with_run_flags=False)
    p_expand.set_defaults(handler=cmd_expand)

    p_fuzz = sub.add_parser("fuzz", help="compare normal forms across strategies")
    common(p_fuzz)
    p_fuzz.add_argument("--seeds", type=int, default=200, help="number of seeded strategies")
    p_fuzz.set_defaults(handler=cmd_fuzz)

    return parser


def main(argv=None) -> int:
    args = build_arg_parser().parse_args(argv)
    return args.handler(args)


if __name__ == "__main__":
    sys.exit(main())

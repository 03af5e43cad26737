"""Command-line driver.

Subcommands: run (simulate), validate (check a definition), compile (print
the flattened global rule listing), oracle (run the plain single-tape
machine). Exit codes: 0 success/shutdown, 1 definition or usage error,
2 step limit, 3 jammed.
"""

from __future__ import annotations

import argparse
import os
import sys

from .daemon import AlwaysPassive, MaskConfig, RandomPolicy, ScriptPolicy, parse_script_file
from .executor import (
    DEFAULT_MAX_STEPS,
    OracleStepLimit,
    RunResult,
    init_configuration,
    run,
    run_basic_oracle,
)
from .model import ACTIVE, AGGRESSIVE, JamError, ValidationError
from .parser import DefinitionError, load_machine
from .stages import compile_machine, emit_pi
from .trace import render_trace, summarize

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_STEP_LIMIT = 2
EXIT_JAMMED = 3

_OUTCOME_EXIT = {"shutdown": EXIT_OK, "step-limit": EXIT_STEP_LIMIT, "jammed": EXIT_JAMMED}


def _color_enabled(stream) -> bool:
    mode = os.environ.get("TMF_COLOR", "auto")
    if mode == "never":
        return False
    return bool(getattr(stream, "isatty", lambda: False)())


def _paint(text: str, good: bool, stream) -> str:
    if not _color_enabled(stream):
        return text
    code = "32" if good else "31"
    return f"\x1b[{code}m{text}\x1b[0m"


def _add_common(cmd: argparse.ArgumentParser) -> None:
    cmd.add_argument("-m", "--metafile", required=True, help="machine metafile")
    cmd.add_argument("--row", type=int, default=0, help="metafile row to use (default 0)")


def _add_run_flags(cmd: argparse.ArgumentParser) -> None:
    cmd.add_argument("--daemon", choices=("passive", "random", "script"), default="passive")
    cmd.add_argument("--p-fault", type=float, default=0.0)
    cmd.add_argument("--p-failure", type=float, default=0.0)
    cmd.add_argument("--seed", type=int, default=0)
    cmd.add_argument("--daemon-script", help="schedule file for --daemon script")
    cmd.add_argument("--allow-failure-in-critical", action="store_true",
                     help="let failures strike during backup/recovery stages")
    cmd.add_argument("--max-steps", type=int, default=DEFAULT_MAX_STEPS)
    cmd.add_argument("--trace", choices=("off", "summary", "full"), default="off")
    cmd.add_argument("--trace-out", help="write the trace here instead of stdout")
    cmd.add_argument("--digests", action="store_true",
                     help="include tape digests in trace records")
    cmd.add_argument("--sweep-fault-step", action="store_true",
                     help="re-run once per step index with a single fault injected there")
    cmd.add_argument("--sweep-failure-step", action="store_true",
                     help="re-run once per step index with a single failure injected there")


def build_arg_parser() -> argparse.ArgumentParser:
    top = argparse.ArgumentParser(prog="tmfsim",
                                  description="Turing machine simulator with faults, "
                                              "failures and checkpoint recovery")
    sub = top.add_subparsers(dest="subcommand", required=True)

    cmd = sub.add_parser("run", help="simulate the five-tape machine")
    _add_common(cmd)
    _add_run_flags(cmd)

    cmd = sub.add_parser("validate", help="load and validate a machine definition")
    _add_common(cmd)

    cmd = sub.add_parser("compile", help="print the flattened global rule listing")
    _add_common(cmd)
    cmd.add_argument("-o", "--output", help="write the listing here instead of stdout")

    cmd = sub.add_parser("oracle", help="run the plain single-tape machine")
    _add_common(cmd)
    cmd.add_argument("--max-steps", type=int, default=DEFAULT_MAX_STEPS)
    return top


def _make_policy(args: argparse.Namespace):
    if args.daemon == "passive":
        return AlwaysPassive()
    if args.daemon == "random":
        return RandomPolicy(args.p_fault, args.p_failure, args.seed)
    if not args.daemon_script:
        raise DefinitionError("--daemon script requires --daemon-script <path>")
    try:
        with open(args.daemon_script, encoding="utf-8") as handle:
            return parse_script_file(handle.read())
    except OSError as exc:
        raise DefinitionError(f"cannot read script: {exc.strerror or exc}",
                              path=args.daemon_script) from None
    except ValueError as exc:
        raise DefinitionError(str(exc), path=args.daemon_script) from None


def _print_result(result: RunResult, out) -> None:
    good = result.outcome == "shutdown"
    print(f"outcome: {_paint(result.outcome, good, out)}", file=out)
    print(f"word: {' '.join(result.final_master_word)}", file=out)
    print(f"steps: {result.steps_used}", file=out)
    print(f"faults: {result.faults_injected}  failures: {result.failures_injected}  "
          f"recoveries: {result.recoveries}  checkpoints: {result.checkpoints_committed}",
          file=out)
    if result.jam_reason:
        print(f"jam: {result.jam_reason}", file=out)


def _write_trace(records, args, out) -> None:
    if args.trace == "off":
        return
    chosen = summarize(records) if args.trace == "summary" else records
    text = render_trace(chosen)
    if args.trace_out:
        with open(args.trace_out, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        out.write(text)


def _single_shot(compiled, word, args, out) -> int:
    policy = _make_policy(args)
    mask = MaskConfig(allow_failure_in_critical=args.allow_failure_in_critical)
    cfg = init_configuration(compiled, word, policy, mask)
    result, records = run(cfg, max_steps=args.max_steps, with_digests=args.digests)
    _print_result(result, out)
    _write_trace(records, args, out)
    return _OUTCOME_EXIT[result.outcome]


def _sweep(compiled, word, args, choice: str, out) -> int:
    mask = MaskConfig(allow_failure_in_critical=args.allow_failure_in_critical)
    baseline_cfg = init_configuration(compiled, word, AlwaysPassive(), mask)
    baseline, _ = run(baseline_cfg, max_steps=args.max_steps)
    if baseline.outcome != "shutdown":
        print(f"baseline run did not shut down: {baseline.outcome}", file=sys.stderr)
        return _OUTCOME_EXIT[baseline.outcome]
    length = baseline.steps_used
    ok = 0
    any_jam = any_limit = any_mismatch = False
    for k in range(length):
        cfg = init_configuration(compiled, word, ScriptPolicy({k: choice}), mask)
        result, _ = run(cfg, max_steps=args.max_steps)
        match = result.final_master_word == baseline.final_master_word
        if result.outcome == "shutdown" and match:
            ok += 1
            continue
        any_jam = any_jam or result.outcome == "jammed"
        any_limit = any_limit or result.outcome == "step-limit"
        any_mismatch = any_mismatch or not match
        print(f"k={k} outcome={result.outcome} word={' '.join(result.final_master_word)} "
              f"recoveries={result.recoveries}", file=out)
    print(f"sweep({choice}): {ok}/{length} runs shut down with the baseline word", file=out)
    if any_jam:
        return EXIT_JAMMED
    if any_limit:
        return EXIT_STEP_LIMIT
    return EXIT_ERROR if any_mismatch else EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_arg_parser().parse_args(argv)
    out = sys.stdout
    try:
        machine, word = load_machine(args.metafile, row=args.row)
    except (DefinitionError, ValidationError) as exc:
        if args.subcommand == "validate":
            issues = exc.issues if isinstance(exc, ValidationError) else [exc]
            for issue in issues:
                print(str(issue), file=sys.stderr)
            print(f"{len(issues)} error(s)", file=out)
            return EXIT_ERROR
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR

    if args.subcommand == "validate":
        print("0 errors", file=out)
        return EXIT_OK

    if args.subcommand == "oracle":
        try:
            final = run_basic_oracle(machine, word, max_steps=args.max_steps)
        except OracleStepLimit as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_STEP_LIMIT
        except JamError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_JAMMED
        print(" ".join(final), file=out)
        return EXIT_OK

    compiled = compile_machine(machine)

    if args.subcommand == "compile":
        listing = emit_pi(compiled)
        if args.output:
            with open(args.output, "w", encoding="utf-8") as handle:
                handle.write(listing)
        else:
            out.write(listing)
        return EXIT_OK

    assert args.subcommand == "run"
    try:
        if args.sweep_fault_step:
            return _sweep(compiled, word, args, ACTIVE, out)
        if args.sweep_failure_step:
            return _sweep(compiled, word, args, AGGRESSIVE, out)
        return _single_shot(compiled, word, args, out)
    except DefinitionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())

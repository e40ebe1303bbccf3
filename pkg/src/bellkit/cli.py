"""Command-line interface: run, demo, sweep, check.

Exit codes: 0 success, 1 usage error, 2 parse/validate failure of a program
file, 3 self-test failure (demo or check).  All report output is plain text,
JSON, or CSV on stdout; diagnostics and errors go to stderr.  Output depends
only on the arguments, so identical invocations produce identical bytes.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional

from . import checks
from .bell import StateClassification, classify, separability_defect, BellDescriptor, bell_state
from .circuit import (
    BellPreparation,
    CircuitProgram,
    MeasureValue,
    parse,
    validate,
)
from .core import (
    EPS_NORM,
    TwoQubitState,
    apply2,
    basis_state,
    bell_operator,
    format_real,
    lift_a,
    named_operator,
    states_close,
)
from .engine import (
    MAX_SEED,
    RelativeBit,
    ShotStatistics,
    derive_rng,
    relative_bit,
    run,
    run_shot,
)

_BASIS_LABELS = ("00", "01", "10", "11")


def _positive_int(text: str) -> int:
    try:
        value = int(text, 10)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return value


def _seed_value(text: str) -> int:
    try:
        value = int(text, 10)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if not 0 <= value <= MAX_SEED:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return value


def _points_value(text: str) -> int:
    value = _positive_int(text)
    if value < 2:
        raise argparse.ArgumentTypeError("sweep needs at least 2 points")
    return value


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bellkit",
        description="Two-qubit simulator: run circuit files, inspect the demo pipeline, "
        "sweep the Bell family, or self-check the invariants.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="parse, validate, and execute a circuit file")
    p_run.add_argument("file", help="circuit program (.bk) to execute")
    p_run.add_argument("--shots", type=_positive_int, default=None, help="override the program's shot count")
    p_run.add_argument("--seed", type=_seed_value, default=None, help="override the program's master seed")
    p_run.add_argument("--format", choices=("text", "json"), default="text", dest="output_format")
    p_run.add_argument("--trace", action="store_true", help="include per-shot measurement records")
    p_run.add_argument("--workers", type=_positive_int, default=1, help="worker processes for shot execution")
    p_run.set_defaults(handler=cmd_run)

    p_demo = sub.add_parser("demo", help="print the built-in entangle/flip/disentangle pipeline")
    p_demo.set_defaults(handler=cmd_demo)

    p_sweep = sub.add_parser("sweep", help="CSV sweep of the Bell family weight s0")
    p_sweep.add_argument("--class", choices=("phi", "psi"), default="phi", dest="bell_class")
    p_sweep.add_argument("--points", type=_points_value, default=21, help="number of s0 samples in [0, 1]")
    p_sweep.add_argument("--shots", type=_positive_int, default=1024)
    p_sweep.add_argument("--seed", type=_seed_value, default=0)
    p_sweep.set_defaults(handler=cmd_sweep)

    p_check = sub.add_parser("check", help="run the invariant self-test suites")
    p_check.set_defaults(handler=cmd_check)
    return parser


def _format_amplitude(z: complex) -> str:
    return f"{z.real:.6f}{z.imag:+.6f}i"


def _format_state(s: TwoQubitState) -> str:
    return " ".join(_format_amplitude(g) for g in s.amplitudes)


def _classification_label(c: StateClassification) -> str:
    if c.kind == "basis":
        label = f"basis |{_BASIS_LABELS[c.basis_index]}>"
    elif c.kind == "bell":
        d = c.bell
        sign = "+" if d.sign == 1 else "-"
        label = f"bell {d.bell_class}{sign} s0={d.s0:.6f}"
    else:
        label = c.kind
    if c.kind != "general" and abs(c.phase - 1.0) > EPS_NORM:
        label += f" phase={_format_amplitude(c.phase)}"
    return label


def _relative_bit_label(s: TwoQubitState) -> str:
    result = relative_bit(s)
    if result.determinate:
        return result.bit.value
    return f"indeterminate (p_same={result.p_same:.6f})"


def _render_counts_table(stats: ShotStatistics) -> list[str]:
    keys = sorted(stats.counts)
    key_width = max(len("outcome"), *(len(k) for k in keys))
    count_width = max(len("count"), *(len(str(stats.counts[k])) for k in keys))
    lines = [f"{'outcome':<{key_width}}  {'count':>{count_width}}  frequency"]
    for key in keys:
        count = stats.counts[key]
        lines.append(f"{key:<{key_width}}  {count:>{count_width}}  {count / stats.shots:.6f}")
    return lines


def _render_trace_text(stats: ShotStatistics) -> list[str]:
    lines = ["", "trace:"]
    assert stats.results is not None
    for index, shot in enumerate(stats.results):
        lines.append(f"shot {index}:")
        for record in shot.records:
            outcome = (
                f"rel={record.outcome.value}"
                if isinstance(record.outcome, RelativeBit)
                else f"{record.particle}={record.outcome}"
            )
            lines.append(
                f"  step {record.step_index} {record.kind} {outcome}"
                f" p={record.probability:.6f} norm={record.projected_norm:.6f}"
                f" post {_format_state(record.post_state)}"
            )
        lines.append(f"  final {_format_state(shot.final_state)}")
    return lines


def _record_payload(record) -> dict:
    outcome = record.outcome.value if isinstance(record.outcome, RelativeBit) else record.outcome
    return {
        "step": record.step_index,
        "kind": record.kind,
        "particle": record.particle,
        "outcome": outcome,
        "probability": record.probability,
        "projected_norm": record.projected_norm,
        "post_state": [x for g in record.post_state.amplitudes for x in (g.real, g.imag)],
    }


def cmd_run(args: argparse.Namespace) -> int:
    try:
        with open(args.file, "rb") as handle:
            data = handle.read()
    except OSError as exc:
        print(f"bellkit: cannot read {args.file}: {exc.strerror or exc}", file=sys.stderr)
        return 1
    try:
        source = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        print(f"{args.file}:1:1: error: file is not valid UTF-8 ({exc.reason})", file=sys.stderr)
        return 2

    program, diagnostics = parse(source)
    if program is None:
        for diag in diagnostics:
            print(f"{args.file}:{diag.render()}", file=sys.stderr)
        return 2
    issues = validate(program)
    for diag in issues:
        print(f"{args.file}:{diag.render()}", file=sys.stderr)
    if any(diag.severity == "error" for diag in issues):
        return 2

    stats = run(
        program,
        shots=args.shots,
        seed=args.seed,
        keep_results=args.trace,
        workers=args.workers,
    )

    if args.output_format == "json":
        payload = stats.to_payload()
        if args.trace:
            assert stats.results is not None
            payload["trace"] = [
                {
                    "shot": index,
                    "records": [_record_payload(r) for r in shot.records],
                    "final_state": [x for g in shot.final_state.amplitudes for x in (g.real, g.imag)],
                }
                for index, shot in enumerate(stats.results)
            ]
        print(json.dumps(payload, indent=2, sort_keys=True))
        return 0

    lines = [f"shots: {stats.shots}", f"seed: {stats.seed}", ""]
    lines.extend(_render_counts_table(stats))
    if not any(key != "none" for key in stats.counts):
        # No measurements: every shot ends in a pure state; show the first.
        shot = run_shot(program, derive_rng(stats.seed, 0))
        final = shot.final_state
        lines.append("")
        lines.append(f"final state: {_format_state(final)}")
        lines.append(f"classification: {_classification_label(classify(final))}")
        lines.append(f"relative bit: {_relative_bit_label(final)}")
    if args.trace:
        lines.extend(_render_trace_text(stats))
    print("\n".join(lines))
    return 0


def cmd_demo(args: argparse.Namespace) -> int:
    """Walk |00> through entangle, flip A, entangle; verify each stage."""
    flip_a = lift_a(named_operator("flip"))
    entangler = bell_operator()

    start = basis_state(0)
    stages = [("prepare", start, start)]
    after_entangle = apply2(entangler, start)
    stages.append(("entangle", after_entangle, bell_state(BellDescriptor("phi", 1))))
    after_flip = apply2(flip_a, after_entangle)
    stages.append(("flip A", after_flip, bell_state(BellDescriptor("psi", 1))))
    after_disentangle = apply2(entangler, after_flip)
    stages.append(("entangle", after_disentangle, basis_state(1)))

    width = max(len(name) for name, _, _ in stages)
    failures = []
    for name, state, expected in stages:
        label = _classification_label(classify(state))
        print(
            f"{name:<{width}}  {_format_state(state)}  {label:<24}  rel={_relative_bit_label(state)}"
        )
        if not states_close(state, expected, EPS_NORM):
            failures.append(name)
    if failures:
        print(f"bellkit demo: stage mismatch at: {', '.join(failures)}", file=sys.stderr)
        return 3
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    print("s0,defect,p0_analytic,p0_empirical")
    for index in range(args.points):
        s0 = index / (args.points - 1)
        descriptor = BellDescriptor(args.bell_class, 1, s0)
        state = bell_state(descriptor)
        defect = separability_defect(state)
        p0 = s0 * s0 if args.bell_class == "phi" else 1.0 - s0 * s0
        program = CircuitProgram(
            preparation=BellPreparation(descriptor=descriptor),
            steps=(MeasureValue(particle="A"),),
        )
        stats = run(program, shots=args.shots, seed=(args.seed + index) % (MAX_SEED + 1))
        empirical = stats.frequencies.get("A=0", 0.0)
        print(f"{format_real(s0)},{format_real(defect)},{format_real(p0)},{format_real(empirical)}")
    return 0


def cmd_check(args: argparse.Namespace) -> int:
    results = checks.run_all()
    failed = False
    for result in results:
        status = "PASS" if result.passed else "FAIL"
        detail = f": {result.detail}" if result.detail else ""
        print(f"{status} {result.name}{detail}")
        failed = failed or not result.passed
    return 3 if failed else 0


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 1
        return 0 if code == 0 else 1
    return args.handler(args)


def entry() -> None:
    sys.exit(main())

"""Command-line interface.

::

    mcmtest analyze --input streams.csv --procedure bh --alpha 0.05 ...
    mcmtest simulate --m 200 --method improved --reps 100 ...
    mcmtest procedures list

Exit status is 0 on success, 1 for bad input (including bad arguments) and 2
when an analysis was truncated: the budget or the replay ran out before the
requested stopping rule fired.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .datasrc import ReplayFormatError, load_replay
from .engine import EngineConfig, parse_stopping, run
from .experiments import Scenario, parse_law, run_improved, run_naive
from .procedures import CATALOG, catalog
from .report import FORMATS, report
from .thresholds import make_threshold_model

EXIT_OK, EXIT_INPUT, EXIT_TRUNCATED = 0, 1, 2


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; 2 is reserved for truncation here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _stop_rule(text: str):
    try:
        return parse_stopping(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _method(text: str):
    if text == "improved":
        return ("improved", None)
    kind, _, s = text.partition(":")
    if kind == "naive" and s.isdigit() and int(s) >= 1:
        return ("naive", int(s))
    raise argparse.ArgumentTypeError("method must be naive:<s> (s >= 1) or improved")


def _law(text: str) -> str:
    try:
        parse_law(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc
    return text


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _add_engine_flags(p: argparse.ArgumentParser, *, threshold: str, epsilon: float, budget: int | None,
                      policy: str) -> None:
    p.add_argument("--procedure", default="bh", help="catalog name (see 'procedures list')")
    p.add_argument("--shaffer-counts", type=_int_list, default=None, metavar="A1,A2,...",
                   help="possible numbers of true nulls, required for shaffer")
    p.add_argument("--alpha", type=float, default=0.05, help="testing threshold, or t* for Pounds-Cheng")
    p.add_argument("--threshold", choices=("fixed", "pc-plugin", "pc-hoeffding"), default=threshold)
    p.add_argument("--epsilon", type=float, default=epsilon, help="overall error probability")
    p.add_argument("--budget", type=int, default=budget, help="maximum samples per hypothesis")
    p.add_argument("--policy", choices=("uniform", "all"), default=policy,
                   help="uniform: sample only undecided hypotheses; all: sample every hypothesis")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mcmtest", description="Monte Carlo multiple testing with three-set decisions.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", help="run the sequential procedure on a replay file")
    a.add_argument("--input", required=True, help="indicator matrix, one sample index per line")
    _add_engine_flags(a, threshold="fixed", epsilon=0.01, budget=None, policy="uniform")
    a.add_argument("--stop", type=_stop_rule, default=parse_stopping("budget"),
                   help="budget | all-decided | fdr-ratio:<eta> | fdr-additive:<xi>")
    a.add_argument("--seed", type=_seed, default=None,
                   help="recorded for reproducibility; replay input is deterministic")
    a.add_argument("--out", default=None, help="write the report here instead of stdout")
    a.add_argument("--format", choices=FORMATS, default="table")

    s = sub.add_parser("simulate", help="repeat naive or sequential testing on synthetic p-values")
    s.add_argument("--m", type=int, default=200)
    s.add_argument("--null-frac", type=float, default=0.5)
    s.add_argument("--alt-law", type=_law, default="uniform:0:0.001")
    s.add_argument("--null-law", type=_law, default="uniform:0.2:1")
    s.add_argument("--scenario-seed", type=_seed, default=0, help="seed for drawing the true p-values")
    s.add_argument("--reps", type=int, default=100)
    s.add_argument("--method", type=_method, default=("improved", None), help="naive:<s> or improved")
    s.add_argument("--estimator", choices=("plain", "plus-one"), default="plain",
                   help="naive point estimate S/s or (S+1)/(s+1)")
    _add_engine_flags(s, threshold="pc-hoeffding", epsilon=0.01, budget=1000, policy="all")
    s.add_argument("--seed", type=_seed, default=1, help="first repetition seed; rep r uses seed + r")
    s.add_argument("--rc-cutoff", type=float, default=0.01)
    s.add_argument("--workers", type=int, default=1, help="worker processes for repetitions")
    s.add_argument("--out", default=None)
    s.add_argument("--format", choices=FORMATS, default="table")

    pr = sub.add_parser("procedures", help="catalog information")
    prs = pr.add_subparsers(dest="action", required=True, parser_class=_Parser)
    prs.add_parser("list", help="list catalog procedures")
    return parser


def _procedure(args, m: int):
    params = {}
    if args.shaffer_counts is not None:
        params["a"] = args.shaffer_counts
    return catalog(args.procedure, m, **params)


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def cmd_analyze(args) -> int:
    try:
        source = load_replay(args.input)
    except OSError as exc:
        raise InputError(f"cannot read {args.input}: {exc.strerror or exc}") from exc
    budget = args.budget if args.budget is not None else source.depth
    config = EngineConfig(
        procedure=_procedure(args, source.m),
        threshold=make_threshold_model(args.threshold, args.alpha),
        epsilon=args.epsilon,
        budget=budget,
        stopping=args.stop,
        policy=args.policy,
        seed=args.seed,
    )
    decision = run(config, source)
    _emit(report(decision, args.format), args.out)
    if decision.truncated:
        print(f"mcmtest: truncated after {decision.iterations} iterations before "
              f"'{decision.stopping_rule}' fired", file=sys.stderr)
        return EXIT_TRUNCATED
    return EXIT_OK


def _simulate_document(args, summary) -> dict:
    kind, s = args.method
    return {
        "method": "improved" if kind == "improved" else f"naive:{s}",
        "m": args.m,
        "null_frac": args.null_frac,
        "alt_law": args.alt_law,
        "null_law": args.null_law,
        "procedure": args.procedure,
        "threshold": args.threshold,
        "alpha": args.alpha,
        "epsilon": args.epsilon if kind == "improved" else None,
        "budget": args.budget if kind == "improved" else s,
        "reps": args.reps,
        "rc_cutoff": args.rc_cutoff,
        "rc": summary.rc,
        "mean_rejected": float(np.mean(summary.rejected)),
        "mean_non_rejected": float(np.mean(summary.non_rejected)),
        "mean_undecided": float(np.mean(summary.undecided)),
        "randomly_classified": [int(i) for i in np.flatnonzero(summary.p_r > args.rc_cutoff)],
    }


def cmd_simulate(args) -> int:
    if args.reps < 1:
        raise InputError("--reps must be at least 1")
    if not 0.0 < args.rc_cutoff < 1.0:
        raise InputError("--rc-cutoff must lie in (0, 1)")
    p_star = Scenario(args.m, args.null_frac, args.alt_law, args.null_law, args.scenario_seed).p_star()
    proc = _procedure(args, args.m)
    model = make_threshold_model(args.threshold, args.alpha)
    seeds = [args.seed + r for r in range(args.reps)]
    kind, s = args.method
    if kind == "naive":
        summary = run_naive(p_star, s, proc, model, seeds, args.rc_cutoff, args.estimator, args.workers)
    else:
        if args.budget is None or args.budget < 0:
            raise InputError("--budget must be a non-negative integer")
        summary = run_improved(p_star, args.budget, proc, model, args.epsilon, seeds, args.rc_cutoff,
                               args.policy, args.workers)
    doc = _simulate_document(args, summary)
    if args.format == "structured":
        text = json.dumps(doc, indent=2) + "\n"
    else:
        text = "".join(f"{k:<20}{v}\n" for k, v in doc.items())
    _emit(text, args.out)
    return EXIT_OK


def cmd_procedures(args) -> int:
    for key, (label, kind, _) in CATALOG.items():
        print(f"{key:<12}{kind:<11}{label}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"analyze": cmd_analyze, "simulate": cmd_simulate, "procedures": cmd_procedures}[args.command]
    try:
        return handler(args)
    except (InputError, ReplayFormatError, ValueError) as exc:
        print(f"mcmtest: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())

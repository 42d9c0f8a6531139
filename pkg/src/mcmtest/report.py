"""Render a :class:`~mcmtest.engine.Decision` as a result document.

Two formats exist.  ``structured`` is JSON with a fixed key order (see
``docs/result-schema.md``); ``table`` is a plain-text summary followed by one
row per hypothesis.  Infinite threshold bounds are written as the string
``"inf"`` in the structured format.
"""

from __future__ import annotations

import json
import math

from .engine import Decision

__all__ = ["FORMATS", "SCHEMA", "report", "to_document"]

SCHEMA = "mcmtest.decision/1"
FORMATS = ("table", "structured")
ALL_DECIDED = "all hypotheses decided"
_CALLS = {1: "rejected", 0: "non-rejected", -1: "undecided"}


def _num(x: float):
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _note(decision: Decision) -> str:
    k = decision.undecided.size
    if k == 0:
        return ALL_DECIDED
    return f"{k} hypotheses undecided"


def to_document(decision: Decision) -> dict:
    """The structured result as a plain dict (insertion order is the schema order)."""
    labels = decision.labels()
    return {
        "schema": SCHEMA,
        "m": decision.m,
        "epsilon": decision.epsilon,
        "procedure": decision.procedure,
        "threshold_model": decision.threshold_model,
        "stopping_rule": decision.stopping_rule,
        "stopping_rule_fired": decision.stopping_rule_fired,
        "truncated": decision.truncated,
        "iterations": decision.iterations,
        "note": _note(decision),
        "counts": {
            "rejected": int(decision.rejected.size),
            "non_rejected": int(decision.non_rejected.size),
            "undecided": int(decision.undecided.size),
        },
        "rejected": [int(i) for i in decision.rejected],
        "non_rejected": [int(i) for i in decision.non_rejected],
        "undecided": [int(i) for i in decision.undecided],
        "threshold": {"lower": _num(decision.threshold.lo), "upper": _num(decision.threshold.hi)},
        "clamped": int(decision.clamped),
        "hypotheses": [
            {
                "index": i,
                "call": _CALLS[int(labels[i])],
                "samples": int(decision.samples[i]),
                "lower": float(decision.lower_p[i]),
                "upper": float(decision.upper_p[i]),
            }
            for i in range(decision.m)
        ],
    }


def _table(decision: Decision) -> str:
    thr = decision.threshold
    lines = [
        f"procedure        {decision.procedure}",
        f"threshold model  {decision.threshold_model}",
        f"threshold        [{thr.lo:.6g}, {thr.hi:.6g}]",
        f"epsilon          {decision.epsilon:g}",
        f"iterations       {decision.iterations}",
        f"stopping rule    {decision.stopping_rule} (fired: {decision.stopping_rule_fired or 'none'})",
        f"truncated        {'yes' if decision.truncated else 'no'}",
        f"rejected         {decision.rejected.size}",
        f"non-rejected     {decision.non_rejected.size}",
        f"undecided        {decision.undecided.size}",
        f"note             {_note(decision)}",
        "",
        f"{'index':>7}  {'call':<13}{'samples':>9}  {'lower':>12}  {'upper':>12}",
    ]
    labels = decision.labels()
    for i in range(decision.m):
        lines.append(
            f"{i:>7}  {_CALLS[int(labels[i])]:<13}{int(decision.samples[i]):>9}  "
            f"{decision.lower_p[i]:>12.6g}  {decision.upper_p[i]:>12.6g}"
        )
    return "\n".join(lines) + "\n"


def report(decision: Decision, format: str = "structured") -> str:
    """Serialize ``decision`` in the requested format."""
    if format == "structured":
        return json.dumps(to_document(decision), indent=2) + "\n"
    if format == "table":
        return _table(decision)
    raise ValueError(f"format must be one of {FORMATS}")

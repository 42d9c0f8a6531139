"""Monte Carlo multiple testing with a guaranteed three-set decision.

Per-hypothesis p-values known only through Monte Carlo exceedance
indicators are bracketed by anytime-valid confidence sequences.  A monotonic
step-up or step-down procedure applied to the interval endpoints then splits
the hypotheses into rejected, non-rejected and undecided sets, correct with
probability at least ``1 - epsilon``.
"""

from __future__ import annotations

from ._backend import BACKEND
from .confseq import ConfSeqState, HoeffdingState, LaiBank, confseq_update, eta_schedule, lai_roots
from .datasrc import ReplaySource, SourceExhausted, SyntheticSource, load_replay
from .engine import Decision, EngineConfig, StoppingRule, run, sandwich
from .procedures import CATALOG, Procedure, catalog, hommel, step_down, step_up
from .report import report
from .thresholds import (
    FixedThreshold,
    PoundsChengHoeffding,
    PoundsChengPlugin,
    ThresholdInterval,
    make_threshold_model,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CATALOG",
    "ConfSeqState",
    "Decision",
    "EngineConfig",
    "FixedThreshold",
    "HoeffdingState",
    "LaiBank",
    "PoundsChengHoeffding",
    "PoundsChengPlugin",
    "Procedure",
    "ReplaySource",
    "SourceExhausted",
    "StoppingRule",
    "SyntheticSource",
    "ThresholdInterval",
    "catalog",
    "confseq_update",
    "eta_schedule",
    "hommel",
    "lai_roots",
    "load_replay",
    "make_threshold_model",
    "report",
    "run",
    "sandwich",
    "step_down",
    "step_up",
]

"""Generic generate-score-refine loop with thresholded acceptance and fallback.

One engine serves layout repair, camera servoing, and graph gatekeeping: the
caller supplies a policy (generate, score, refine, fallback) and the loop
accepts once the score clears the threshold, refines while budget remains,
and otherwise hands the context to the fallback. An opt-in mode returns the
best output seen instead of invoking the fallback, for callers that have no
meaningful fallback agent.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Any, Callable, Protocol


class PolicyError(RuntimeError):
    """A policy call failed; the trace up to the failure is preserved."""

    def __init__(self, stage: str, cause: Exception, trace: list["TraceEntry"]):
        super().__init__(f"policy {stage} failed: {cause}")
        self.stage = stage
        self.cause = cause
        self.trace = trace


@dataclass(frozen=True)
class ReflectionConfig:
    threshold: float = 8.0
    horizon: int = 5
    # "handover" invokes the fallback after the horizon; "best" returns the
    # best-scoring output seen (used where no fallback agent exists)
    budget_mode: str = "handover"

    def __post_init__(self) -> None:
        if self.horizon < 0:
            raise ValueError("horizon must be >= 0")
        if self.budget_mode not in ("handover", "best"):
            raise ValueError(f"unknown budget_mode {self.budget_mode!r}")


@dataclass(frozen=True)
class Feedback:
    score: float
    critique: Any = None
    suggested_refinement: Any = None


class ReflectionPolicy(Protocol):
    def generate(self, context: Any) -> Any: ...

    def score(self, output: Any, context: Any) -> Feedback: ...

    def refine(self, output: Any, feedback: Feedback, context: Any) -> Any: ...

    def fallback(self, context: Any) -> Any: ...


@dataclass(frozen=True)
class TraceEntry:
    turn: int
    output_digest: str
    score: float
    feedback: Feedback


@dataclass
class ReflectionOutcome:
    result: Any
    status: str  # accepted | handover | budget_exhausted_best
    turns_used: int
    trace: list[TraceEntry] = field(default_factory=list)

    @property
    def accepted(self) -> bool:
        return self.status == "accepted"

    def scores(self) -> list[float]:
        return [entry.score for entry in self.trace]


def _digest(output: Any) -> str:
    return hashlib.sha256(repr(output).encode("utf-8", "replace")).hexdigest()[:16]


def run_reflection(policy: ReflectionPolicy, context: Any,
                   config: ReflectionConfig = ReflectionConfig()) -> ReflectionOutcome:
    """Run the loop: accept at score >= threshold, refine below it while turns
    remain, otherwise fall back (or return best-so-far in "best" mode).

    The trace holds one entry per scored output, so its length is always
    turns_used + 1. generate runs exactly once, refine exactly turns_used
    times, and the fallback at most once.
    """
    trace: list[TraceEntry] = []

    def guarded(stage: str, fn: Callable, *args):
        try:
            return fn(*args)
        except Exception as exc:  # noqa: BLE001 - policy failures are opaque
            raise PolicyError(stage, exc, trace) from exc

    output = guarded("generate", policy.generate, context)
    best_output = output
    best_score = float("-inf")
    turn = 0
    while True:
        feedback = guarded("score", policy.score, output, context)
        trace.append(TraceEntry(turn, _digest(output), feedback.score, feedback))
        if feedback.score > best_score:
            best_score = feedback.score
            best_output = output
        if feedback.score >= config.threshold:
            return ReflectionOutcome(output, "accepted", turn, trace)
        if turn < config.horizon:
            output = guarded("refine", policy.refine, output, feedback, context)
            turn += 1
            continue
        if config.budget_mode == "best":
            return ReflectionOutcome(best_output, "budget_exhausted_best", turn, trace)
        final = guarded("fallback", policy.fallback, context)
        return ReflectionOutcome(final, "handover", turn, trace)


def trace_to_json(outcome: ReflectionOutcome) -> dict:
    """Per-turn scores for metric reports."""
    return {
        "status": outcome.status,
        "turns_used": outcome.turns_used,
        "scores": outcome.scores(),
    }

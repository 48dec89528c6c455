"""Branch-for-branch checks of the generate-score-refine loop."""
import pytest

from blocking_engine.reflection_core import (
    Feedback,
    PolicyError,
    ReflectionConfig,
    run_reflection,
    trace_to_json,
)


class ScriptedPolicy:
    """Replays a fixed score sequence and counts every call."""

    def __init__(self, scores, fallback_result="fallback"):
        self.scores = list(scores)
        self.fallback_result = fallback_result
        self.generate_calls = 0
        self.refine_calls = 0
        self.fallback_calls = 0
        self.score_calls = 0

    def generate(self, context):
        self.generate_calls += 1
        return "o0"

    def score(self, output, context):
        s = self.scores[self.score_calls]
        self.score_calls += 1
        return Feedback(score=s, critique=f"score {s}")

    def refine(self, output, feedback, context):
        self.refine_calls += 1
        return f"o{self.refine_calls}"

    def fallback(self, context):
        self.fallback_calls += 1
        return self.fallback_result


def test_accept_immediately():
    policy = ScriptedPolicy([9])
    outcome = run_reflection(policy, None)
    assert outcome.status == "accepted"
    assert outcome.turns_used == 0
    assert outcome.result == "o0"
    assert len(outcome.trace) == 1
    assert policy.refine_calls == 0
    assert policy.fallback_calls == 0


def test_accept_after_two_refinements():
    policy = ScriptedPolicy([5, 6, 8])
    outcome = run_reflection(policy, None)
    assert outcome.status == "accepted"
    assert outcome.turns_used == 2
    assert policy.refine_calls == 2
    assert outcome.result == "o2"
    assert outcome.scores() == [5, 6, 8]


def test_handover_at_horizon():
    policy = ScriptedPolicy([3, 3, 3, 3, 3, 3])
    outcome = run_reflection(policy, None, ReflectionConfig(threshold=8, horizon=5))
    assert outcome.status == "handover"
    assert outcome.turns_used == 5
    assert policy.fallback_calls == 1
    assert policy.refine_calls == 5
    assert policy.generate_calls == 1
    assert outcome.result == "fallback"
    assert len(outcome.trace) == outcome.turns_used + 1


def test_best_mode_returns_best_scoring_output():
    policy = ScriptedPolicy([3, 6, 4, 2, 1, 0])
    outcome = run_reflection(
        policy, None, ReflectionConfig(threshold=8, horizon=5, budget_mode="best")
    )
    assert outcome.status == "budget_exhausted_best"
    assert outcome.result == "o1"  # the output that scored 6
    assert policy.fallback_calls == 0


def test_trace_trichotomy():
    # every entry but the last scores below threshold; the last either clears
    # it or sits at the horizon
    for scores, cfg in [
        ([5, 9], ReflectionConfig()),
        ([1, 2, 3, 4, 5, 6], ReflectionConfig()),
        ([7.9, 8.0], ReflectionConfig()),
    ]:
        outcome = run_reflection(ScriptedPolicy(scores), None, cfg)
        for entry in outcome.trace[:-1]:
            assert entry.score < cfg.threshold
        last = outcome.trace[-1]
        assert last.score >= cfg.threshold or last.turn == cfg.horizon


def test_determinism_identical_traces():
    a = run_reflection(ScriptedPolicy([4, 5, 8]), None)
    b = run_reflection(ScriptedPolicy([4, 5, 8]), None)
    assert a.trace == b.trace
    assert a.status == b.status


def test_zero_horizon_goes_straight_to_fallback():
    policy = ScriptedPolicy([3])
    outcome = run_reflection(policy, None, ReflectionConfig(horizon=0))
    assert outcome.status == "handover"
    assert outcome.turns_used == 0
    assert policy.refine_calls == 0


def test_policy_error_preserves_trace():
    class Exploding(ScriptedPolicy):
        def refine(self, output, feedback, context):
            raise RuntimeError("refiner crashed")

    with pytest.raises(PolicyError) as err:
        run_reflection(Exploding([3]), None)
    assert err.value.stage == "refine"
    assert len(err.value.trace) == 1


def test_binary_verdict_mapping():
    # engine verdicts map 0 -> score 0 (reject) and 1 -> score 10 (accept)
    ok = run_reflection(ScriptedPolicy([10]), None)
    assert ok.accepted
    no = run_reflection(ScriptedPolicy([0, 0, 0, 0, 0, 0]), None)
    assert no.status == "handover"


def test_trace_export_shape():
    outcome = run_reflection(ScriptedPolicy([5, 8]), None)
    doc = trace_to_json(outcome)
    assert doc == {"status": "accepted", "turns_used": 1, "scores": [5, 8]}

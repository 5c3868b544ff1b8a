import pytest
from hypothesis import given, strategies as st

from quizsense.intervene import (
    DEFAULT_CATALOG,
    Behavior,
    CatalogMissing,
    DecisionAction,
    InstructorDecision,
    InterventionPlan,
    InvalidTransition,
    PlanStatus,
    PlanStore,
    Timing,
    UnknownPlan,
    UnknownStrategy,
    catalog_from_json,
    catalog_to_json,
    plan_from_dict,
    plan_to_dict,
    recommend_interventions,
    record_decision,
)
from quizsense.risk import BehaviorFlags, RiskAssessment, RiskLevel


def flags(erratic=False, delayed=False, irregular=False):
    return BehaviorFlags(
        erratic=erratic, delayed=delayed, irregular=irregular,
        count_shap_sum=-0.12 if erratic else 0.05,
        inactive_shap=-0.34 if delayed else 0.01,
        stat_shap_sum=-0.07 if irregular else 0.02,
    )


def assessment(level, f, attempt_id="a1", date_rel=6):
    return RiskAssessment(attempt_id=attempt_id, date_rel=date_rel,
                          flags=f, level=level, model_prediction=0.3)


def names(plan):
    return [s.name for s in plan.strategies]


class TestCatalog:
    def test_twelve_strategies_three_per_behavior(self):
        assert len(DEFAULT_CATALOG) == 12
        for behavior in Behavior:
            matching = [s for s in DEFAULT_CATALOG if s.target_behavior is behavior]
            assert len(matching) == 3

    def test_ids_unique(self):
        ids = [s.id for s in DEFAULT_CATALOG]
        assert len(set(ids)) == len(ids)

    def test_json_round_trip(self):
        blob = catalog_to_json()
        assert catalog_from_json(blob) == DEFAULT_CATALOG

    def test_every_strategy_has_citation(self):
        assert all(s.citation_key for s in DEFAULT_CATALOG)


class TestRecommend:
    def test_high_gets_three_strategies_immediate(self):
        plan = recommend_interventions(
            assessment(RiskLevel.HIGH, flags(erratic=True, delayed=True)))
        assert set(names(plan)) == {"Structured Learning Plans",
                                    "Motivational Messages",
                                    "Increased Flexibility"}
        assert plan.timing is Timing.IMMEDIATE

    def test_medium_erratic_leads_with_gamification(self):
        plan = recommend_interventions(
            assessment(RiskLevel.MEDIUM, flags(erratic=True)))
        assert names(plan) == ["Gamification Elements", "Progressive Deadlines"]
        assert plan.timing is Timing.AFTER_QUIZ_WINDOW

    def test_medium_delayed_leads_with_reminders(self):
        plan = recommend_interventions(
            assessment(RiskLevel.MEDIUM, flags(delayed=True)))
        assert names(plan) == ["Deadline Reminders", "Progressive Deadlines"]

    def test_low_strategies_and_checkpoint_timing(self):
        plan = recommend_interventions(
            assessment(RiskLevel.LOW, flags(irregular=True)))
        assert names(plan) == ["Self-Reflection Feedback",
                               "Individualized Time Slots",
                               "Adapted Quiz Structure"]
        assert plan.timing is Timing.AT_COURSE_CHECKPOINT

    def test_engaged_still_gets_a_plan(self):
        plan = recommend_interventions(assessment(RiskLevel.ENGAGED, flags()))
        assert names(plan) == ["Challenging Content", "Peer Mentorship",
                               "Recognition of Achievement"]
        assert plan.timing is Timing.AT_COURSE_CHECKPOINT
        assert plan.strategies  # non-empty even with no flags set

    def test_rationale_embeds_all_three_sums(self):
        f = BehaviorFlags(erratic=True, delayed=True, irregular=False,
                          count_shap_sum=-0.123456, inactive_shap=-0.654321,
                          stat_shap_sum=0.111111)
        plan = recommend_interventions(assessment(RiskLevel.HIGH, f))
        assert "-0.123456" in plan.rationale
        assert "-0.654321" in plan.rationale
        assert "+0.111111" in plan.rationale
        assert "erratic" in plan.rationale and "delayed" in plan.rationale

    def test_pure_function_of_inputs(self):
        a = assessment(RiskLevel.MEDIUM, flags(delayed=True))
        assert recommend_interventions(a) == recommend_interventions(a)

    def test_empty_catalog_rejected(self):
        with pytest.raises(CatalogMissing):
            recommend_interventions(assessment(RiskLevel.LOW, flags(irregular=True)),
                                    catalog=())

    def test_incomplete_catalog_rejected(self):
        partial = tuple(s for s in DEFAULT_CATALOG if s.id != "progressive-deadlines")
        with pytest.raises(CatalogMissing):
            recommend_interventions(assessment(RiskLevel.MEDIUM, flags(delayed=True)),
                                    catalog=partial)

    def test_plan_round_trips_through_dict(self):
        plan = recommend_interventions(
            assessment(RiskLevel.HIGH, flags(erratic=True, delayed=True)),
            student_id="s42")
        assert plan_from_dict(plan_to_dict(plan)) == plan

    @given(erratic=st.booleans(), delayed=st.booleans(), irregular=st.booleans())
    def test_high_risk_always_immediate(self, erratic, delayed, irregular):
        from quizsense.risk import risk_level
        f = flags(erratic=erratic, delayed=delayed, irregular=irregular)
        level = risk_level(f)
        plan = recommend_interventions(assessment(level, f))
        assert plan.strategies
        if level is RiskLevel.HIGH:
            assert plan.timing is Timing.IMMEDIATE
        targeted = {Behavior.ERRATIC: erratic, Behavior.DELAYED: delayed,
                    Behavior.IRREGULAR: irregular}
        matched = [targeted.get(s.target_behavior, False) for s in plan.strategies]
        # targeted strategies never follow untargeted ones
        assert matched == sorted(matched, reverse=True)


def make_store_with_plan():
    store = PlanStore()
    plan = recommend_interventions(
        assessment(RiskLevel.MEDIUM, flags(erratic=True)), student_id="s7")
    store.add_plan(plan)
    return store, plan


class TestDecisions:
    def test_approve_pending(self):
        store, plan = make_store_with_plan()
        decision = InstructorDecision(plan.plan_id, DecisionAction.APPROVE,
                                      actor="t1", timestamp=1_700_000_000)
        record = record_decision(plan.plan_id, decision, store)
        assert record.status is PlanStatus.APPROVED
        assert len(record.decisions) == 1
        assert record.active == plan.strategy_ids

    def test_override_replaces_but_retains_original(self):
        store, plan = make_store_with_plan()
        replacement = ("motivational-messages",)
        decision = InstructorDecision(plan.plan_id, DecisionAction.OVERRIDE,
                                      actor="t1", timestamp=1, strategies=replacement)
        record = store.record_decision(decision)
        assert record.status is PlanStatus.OVERRIDDEN
        assert record.active == replacement
        assert record.history == (plan.strategy_ids,)

    def test_personalize_edits_list(self):
        store, plan = make_store_with_plan()
        edited = ("gamification-elements", "structured-learning-plans")
        decision = InstructorDecision(plan.plan_id, DecisionAction.PERSONALIZE,
                                      actor="t2", timestamp=2, strategies=edited)
        record = store.record_decision(decision)
        assert record.status is PlanStatus.PERSONALIZED
        assert record.active == edited

    def test_unknown_plan(self):
        store, _ = make_store_with_plan()
        decision = InstructorDecision("plan:nope:d0", DecisionAction.APPROVE,
                                      actor="t1", timestamp=3)
        with pytest.raises(UnknownPlan):
            store.record_decision(decision)

    def test_double_decision_needs_supersede(self):
        store, plan = make_store_with_plan()
        store.record_decision(InstructorDecision(
            plan.plan_id, DecisionAction.APPROVE, actor="t1", timestamp=1))
        late = InstructorDecision(plan.plan_id, DecisionAction.OVERRIDE, actor="t2",
                                  timestamp=2, strategies=("deadline-reminders",))
        with pytest.raises(InvalidTransition):
            store.record_decision(late)
        record = store.record_decision(late, supersede=True)
        assert record.status is PlanStatus.OVERRIDDEN
        assert len(record.decisions) == 2

    def test_unknown_strategy_in_decision(self):
        store, plan = make_store_with_plan()
        decision = InstructorDecision(plan.plan_id, DecisionAction.OVERRIDE,
                                      actor="t1", timestamp=1, strategies=("bogus",))
        with pytest.raises(UnknownStrategy):
            store.record_decision(decision)

    def test_override_requires_strategies(self):
        store, plan = make_store_with_plan()
        decision = InstructorDecision(plan.plan_id, DecisionAction.OVERRIDE,
                                      actor="t1", timestamp=1)
        with pytest.raises(ValueError):
            store.record_decision(decision)

    def test_mismatched_plan_id_rejected(self):
        store, plan = make_store_with_plan()
        decision = InstructorDecision(plan.plan_id, DecisionAction.APPROVE,
                                      actor="t1", timestamp=1)
        with pytest.raises(ValueError):
            record_decision("plan:other:d0", decision, store)

    def test_duplicate_plan_rejected(self):
        store, plan = make_store_with_plan()
        with pytest.raises(ValueError):
            store.add_plan(plan)


ACTION_ST = st.sampled_from([DecisionAction.APPROVE, DecisionAction.PERSONALIZE,
                             DecisionAction.OVERRIDE])
STRATEGY_IDS = sorted(s.id for s in DEFAULT_CATALOG)


class TestEventSourcing:
    def test_replay_reconstructs_state(self):
        store, plan = make_store_with_plan()
        second = recommend_interventions(
            assessment(RiskLevel.HIGH, flags(erratic=True, delayed=True),
                       attempt_id="a2", date_rel=3), student_id="s8")
        store.add_plan(second)
        store.record_decision(InstructorDecision(
            plan.plan_id, DecisionAction.OVERRIDE, actor="t1", timestamp=10,
            strategies=("motivational-messages",)))
        store.record_decision(InstructorDecision(
            second.plan_id, DecisionAction.APPROVE, actor="t2", timestamp=11))

        rebuilt = PlanStore.replay(store.events())
        assert rebuilt.records() == store.records()
        assert rebuilt.events() == store.events()

    def test_jsonl_round_trip(self):
        from quizsense.intervene import read_decisions_jsonl, write_decisions_jsonl
        store, plan = make_store_with_plan()
        store.record_decision(InstructorDecision(
            plan.plan_id, DecisionAction.PERSONALIZE, actor="t9", timestamp=5,
            strategies=("increased-flexibility", "progressive-deadlines")))
        blob = write_decisions_jsonl(store)
        rebuilt = read_decisions_jsonl(blob)
        assert rebuilt.records() == store.records()

    @given(st.lists(st.tuples(ACTION_ST,
                              st.lists(st.sampled_from(STRATEGY_IDS), min_size=1,
                                       max_size=3, unique=True)),
                    max_size=6))
    def test_replay_matches_any_decision_sequence(self, steps):
        store = PlanStore()
        plan = recommend_interventions(
            assessment(RiskLevel.LOW, flags(irregular=True)))
        store.add_plan(plan)
        for action, ids in steps:
            strategies = () if action is DecisionAction.APPROVE else tuple(ids)
            store.record_decision(
                InstructorDecision(plan.plan_id, action, actor="t", timestamp=1,
                                   strategies=strategies),
                supersede=True)
        rebuilt = PlanStore.replay(store.events())
        assert rebuilt.records() == store.records()

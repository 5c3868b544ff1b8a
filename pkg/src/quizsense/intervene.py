"""Intervention planning: strategy catalog, risk-tier plans, instructor decision log."""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

from .risk import BehaviorFlags, RiskAssessment, RiskLevel


class CatalogMissing(RuntimeError):
    """Raised when no usable strategy catalog is available."""


class UnknownPlan(KeyError):
    def __init__(self, plan_id: str):
        super().__init__(plan_id)
        self.plan_id = plan_id


class UnknownStrategy(KeyError):
    def __init__(self, strategy_id: str):
        super().__init__(strategy_id)
        self.strategy_id = strategy_id


class InvalidTransition(RuntimeError):
    def __init__(self, plan_id: str, status: "PlanStatus"):
        super().__init__(f"plan {plan_id} already finalized as {status.value}")
        self.plan_id = plan_id
        self.status = status


class Behavior(str, Enum):
    ERRATIC = "Erratic"
    DELAYED = "Delayed"
    IRREGULAR = "Irregular"
    ENGAGED = "Engaged"


class Timing(str, Enum):
    IMMEDIATE = "Immediate"
    AFTER_QUIZ_WINDOW = "AfterQuizWindow"
    AT_COURSE_CHECKPOINT = "AtCourseCheckpoint"


class PlanStatus(str, Enum):
    PENDING = "Pending"
    APPROVED = "Approved"
    PERSONALIZED = "Personalized"
    OVERRIDDEN = "Overridden"


class DecisionAction(str, Enum):
    APPROVE = "Approve"
    PERSONALIZE = "Personalize"
    OVERRIDE = "Override"


@dataclass(frozen=True)
class InterventionStrategy:
    id: str
    name: str
    target_behavior: Behavior
    description: str
    citation_key: str


DEFAULT_CATALOG: tuple[InterventionStrategy, ...] = (
    InterventionStrategy(
        "structured-learning-plans", "Structured Learning Plans", Behavior.ERRATIC,
        "Fixed weekly study routine with scheduled check-ins.",
        "structured_learning_plans"),
    InterventionStrategy(
        "gamification-elements", "Gamification Elements", Behavior.ERRATIC,
        "Points and badges awarded for activity on several days per week.",
        "gamification_elements"),
    InterventionStrategy(
        "increased-flexibility", "Increased Flexibility", Behavior.ERRATIC,
        "Negotiable time slots and extended target dates.",
        "increased_flexibility"),
    InterventionStrategy(
        "motivational-messages", "Motivational Messages", Behavior.DELAYED,
        "Personalized nudges sent after sustained inactivity.",
        "motivational_messages"),
    InterventionStrategy(
        "deadline-reminders", "Deadline Reminders", Behavior.DELAYED,
        "Scheduled alerts ahead of recommended submission windows.",
        "deadline_reminders"),
    InterventionStrategy(
        "progressive-deadlines", "Progressive Deadlines", Behavior.DELAYED,
        "Intermediate milestones that break the work into smaller steps.",
        "progressive_deadlines"),
    InterventionStrategy(
        "self-reflection-feedback", "Self-Reflection Feedback", Behavior.IRREGULAR,
        "Dashboard views of the student's own activity timeline.",
        "self_reflection_feedback"),
    InterventionStrategy(
        "individualized-time-slots", "Individualized Time Slots", Behavior.IRREGULAR,
        "Suggested study times derived from past activity peaks.",
        "individualized_time_slots"),
    InterventionStrategy(
        "adapted-quiz-structure", "Adapted Quiz Structure", Behavior.IRREGULAR,
        "Shorter, more frequent quizzes in place of long ones.",
        "adaptive_quiz_structure"),
    InterventionStrategy(
        "challenging-content", "Challenging Content", Behavior.ENGAGED,
        "Optional advanced tasks and bonus quizzes.",
        "challenging_content"),
    InterventionStrategy(
        "peer-mentorship", "Peer Mentorship", Behavior.ENGAGED,
        "Pairing active students with less active peers as mentors.",
        "peer_mentorship"),
    InterventionStrategy(
        "recognition-of-achievement", "Recognition of Achievement", Behavior.ENGAGED,
        "Badges and certificates for sustained participation.",
        "reward_systems"),
)

_HIGH_IDS = ("structured-learning-plans", "motivational-messages", "increased-flexibility")
_MEDIUM_ERRATIC_ID = "gamification-elements"
_MEDIUM_DELAYED_ID = "deadline-reminders"
_MEDIUM_ALWAYS_IDS = ("progressive-deadlines",)
_LOW_IDS = ("self-reflection-feedback", "individualized-time-slots", "adapted-quiz-structure")
_ENGAGED_IDS = ("challenging-content", "peer-mentorship", "recognition-of-achievement")

PLAN_TIMING = {
    RiskLevel.HIGH: Timing.IMMEDIATE,
    RiskLevel.MEDIUM: Timing.AFTER_QUIZ_WINDOW,
    RiskLevel.LOW: Timing.AT_COURSE_CHECKPOINT,
    RiskLevel.ENGAGED: Timing.AT_COURSE_CHECKPOINT,
}


@dataclass(frozen=True)
class InterventionPlan:
    plan_id: str
    attempt_id: str | None
    risk_level: RiskLevel
    strategies: tuple[InterventionStrategy, ...]  # most targeted first
    timing: Timing
    rationale: str
    date_rel: int | None = None
    student_id: str | None = None

    @property
    def strategy_ids(self) -> tuple[str, ...]:
        return tuple(s.id for s in self.strategies)


def _tier_strategy_ids(level: RiskLevel, flags: BehaviorFlags) -> tuple[str, ...]:
    if level is RiskLevel.HIGH:
        return _HIGH_IDS
    if level is RiskLevel.MEDIUM:
        ids: list[str] = []
        if flags.erratic:
            ids.append(_MEDIUM_ERRATIC_ID)
        if flags.delayed:
            ids.append(_MEDIUM_DELAYED_ID)
        ids.extend(_MEDIUM_ALWAYS_IDS)
        return tuple(ids)
    if level is RiskLevel.LOW:
        return _LOW_IDS
    return _ENGAGED_IDS


def _flagged_behaviors(flags: BehaviorFlags) -> set[Behavior]:
    out: set[Behavior] = set()
    if flags.erratic:
        out.add(Behavior.ERRATIC)
    if flags.delayed:
        out.add(Behavior.DELAYED)
    if flags.irregular:
        out.add(Behavior.IRREGULAR)
    return out


def plan_rationale(level: RiskLevel, flags: BehaviorFlags) -> str:
    names = [name for name, on in (("erratic", flags.erratic),
                                   ("delayed", flags.delayed),
                                   ("irregular", flags.irregular)) if on]
    flag_text = ", ".join(names) if names else "none"
    return (f"{level.value} risk (flags: {flag_text}); "
            f"shap sums: period_counts={flags.count_shap_sum:+.6f}, "
            f"days_inactive={flags.inactive_shap:+.6f}, "
            f"gap_stats={flags.stat_shap_sum:+.6f}")


def _plan_id(assessment: RiskAssessment) -> str:
    attempt = assessment.attempt_id if assessment.attempt_id is not None else "anon"
    day = f"d{assessment.date_rel}" if assessment.date_rel is not None else "dx"
    return f"plan:{attempt}:{day}"


def recommend_interventions(assessment: RiskAssessment,
                            catalog: Sequence[InterventionStrategy] | None = None,
                            student_id: str | None = None) -> InterventionPlan:
    """Build the plan for one assessment; pure in (level, flags)."""
    if catalog is None:
        catalog = DEFAULT_CATALOG
    if not catalog:
        raise CatalogMissing("strategy catalog is empty")
    by_id = {s.id: s for s in catalog}
    level = assessment.level
    flags = assessment.flags
    try:
        strategies = [by_id[sid] for sid in _tier_strategy_ids(level, flags)]
    except KeyError as exc:
        raise CatalogMissing(f"catalog lacks strategy {exc.args[0]}") from exc
    flagged = _flagged_behaviors(flags)
    # stable sort: targeted strategies lead, tier order preserved within ranks
    strategies.sort(key=lambda s: 0 if s.target_behavior in flagged else 1)
    return InterventionPlan(
        plan_id=_plan_id(assessment),
        attempt_id=assessment.attempt_id,
        risk_level=level,
        strategies=tuple(strategies),
        timing=PLAN_TIMING[level],
        rationale=plan_rationale(level, flags),
        date_rel=assessment.date_rel,
        student_id=student_id,
    )


@dataclass(frozen=True)
class InstructorDecision:
    plan_id: str
    action: DecisionAction
    actor: str
    timestamp: int
    strategies: tuple[str, ...] = ()  # ids; required for Personalize/Override


@dataclass
class PlanRecord:
    plan: InterventionPlan
    status: PlanStatus = PlanStatus.PENDING
    active: tuple[str, ...] = ()
    history: tuple[tuple[str, ...], ...] = ()  # superseded strategy lists, oldest first
    decisions: tuple[InstructorDecision, ...] = ()


class PlanStore:
    """In-memory plan state rebuilt exactly from its own event log."""

    def __init__(self, catalog: Sequence[InterventionStrategy] | None = None):
        self._catalog = tuple(catalog) if catalog is not None else DEFAULT_CATALOG
        self._by_id = {s.id: s for s in self._catalog}
        self._records: dict[str, PlanRecord] = {}
        self._events: list[dict] = []

    @property
    def catalog(self) -> tuple[InterventionStrategy, ...]:
        return self._catalog

    def __len__(self) -> int:
        return len(self._records)

    def __contains__(self, plan_id: str) -> bool:
        return plan_id in self._records

    def plan_ids(self) -> list[str]:
        return list(self._records)

    def get(self, plan_id: str) -> PlanRecord:
        try:
            return self._records[plan_id]
        except KeyError:
            raise UnknownPlan(plan_id) from None

    def add_plan(self, plan: InterventionPlan) -> PlanRecord:
        if plan.plan_id in self._records:
            raise ValueError(f"duplicate plan id {plan.plan_id}")
        record = self._apply_created(plan)
        self._events.append({"event": "plan_created", "plan": plan_to_dict(plan)})
        return record

    def record_decision(self, decision: InstructorDecision, *,
                        supersede: bool = False) -> PlanRecord:
        record = self.get(decision.plan_id)
        if record.status is not PlanStatus.PENDING and not supersede:
            raise InvalidTransition(decision.plan_id, record.status)
        if decision.action is DecisionAction.APPROVE:
            if decision.strategies:
                raise ValueError("Approve carries no strategy list")
        else:
            if not decision.strategies:
                raise ValueError(f"{decision.action.value} requires a strategy list")
            for sid in decision.strategies:
                if sid not in self._by_id:
                    raise UnknownStrategy(sid)
        record = self._apply_decision(decision)
        self._events.append({
            "event": "decision",
            "planID": decision.plan_id,
            "action": decision.action.value,
            "actor": decision.actor,
            "timestamp": decision.timestamp,
            "strategies": list(decision.strategies),
            "supersede": supersede,
        })
        return record

    # state mutators shared by the live path and replay
    def _apply_created(self, plan: InterventionPlan) -> PlanRecord:
        record = PlanRecord(plan=plan, active=plan.strategy_ids)
        self._records[plan.plan_id] = record
        return record

    def _apply_decision(self, decision: InstructorDecision) -> PlanRecord:
        record = self._records[decision.plan_id]
        record.decisions = record.decisions + (decision,)
        if decision.action is DecisionAction.APPROVE:
            record.status = PlanStatus.APPROVED
        else:
            record.history = record.history + (record.active,)
            record.active = decision.strategies
            record.status = (PlanStatus.PERSONALIZED
                             if decision.action is DecisionAction.PERSONALIZE
                             else PlanStatus.OVERRIDDEN)
        return record

    def events(self) -> tuple[dict, ...]:
        return tuple(self._events)

    def records(self) -> dict[str, PlanRecord]:
        return dict(self._records)

    @classmethod
    def replay(cls, events: Iterable[dict],
               catalog: Sequence[InterventionStrategy] | None = None) -> "PlanStore":
        store = cls(catalog)
        for event in events:
            kind = event.get("event")
            if kind == "plan_created":
                store._apply_created(plan_from_dict(event["plan"]))
            elif kind == "decision":
                store._apply_decision(InstructorDecision(
                    plan_id=event["planID"],
                    action=DecisionAction(event["action"]),
                    actor=event["actor"],
                    timestamp=int(event["timestamp"]),
                    strategies=tuple(event.get("strategies", ())),
                ))
            else:
                raise ValueError(f"unknown event kind {kind!r}")
            store._events.append(dict(event))
        return store


def record_decision(plan_id: str, decision: InstructorDecision, store: PlanStore, *,
                    supersede: bool = False) -> PlanRecord:
    if plan_id != decision.plan_id:
        raise ValueError(f"decision targets {decision.plan_id!r}, not {plan_id!r}")
    return store.record_decision(decision, supersede=supersede)


def strategy_to_dict(strategy: InterventionStrategy) -> dict:
    return {
        "id": strategy.id,
        "name": strategy.name,
        "targetBehavior": strategy.target_behavior.value,
        "description": strategy.description,
        "citationKey": strategy.citation_key,
    }


def strategy_from_dict(obj: dict) -> InterventionStrategy:
    return InterventionStrategy(
        id=obj["id"],
        name=obj["name"],
        target_behavior=Behavior(obj["targetBehavior"]),
        description=obj["description"],
        citation_key=obj["citationKey"],
    )


def plan_to_dict(plan: InterventionPlan) -> dict:
    return {
        "planID": plan.plan_id,
        "attemptID": plan.attempt_id,
        "riskLevel": plan.risk_level.value,
        "strategies": [strategy_to_dict(s) for s in plan.strategies],
        "timing": plan.timing.value,
        "rationale": plan.rationale,
        "dateRel": plan.date_rel,
        "studentID": plan.student_id,
    }


def plan_from_dict(obj: dict) -> InterventionPlan:
    strategies = tuple(strategy_from_dict(s) for s in obj["strategies"])
    return InterventionPlan(
        plan_id=obj["planID"],
        attempt_id=obj.get("attemptID"),
        risk_level=RiskLevel(obj["riskLevel"]),
        strategies=strategies,
        timing=Timing(obj["timing"]),
        rationale=obj["rationale"],
        date_rel=obj.get("dateRel"),
        student_id=obj.get("studentID"),
    )


def record_to_dict(record: PlanRecord) -> dict:
    return {
        "plan": plan_to_dict(record.plan),
        "status": record.status.value,
        "activeStrategies": list(record.active),
        "history": [list(h) for h in record.history],
        "decisions": [{
            "planID": d.plan_id,
            "action": d.action.value,
            "actor": d.actor,
            "timestamp": d.timestamp,
            "strategies": list(d.strategies),
        } for d in record.decisions],
    }


def catalog_to_json(catalog: Sequence[InterventionStrategy] | None = None) -> bytes:
    if catalog is None:
        catalog = DEFAULT_CATALOG
    payload = {
        "strategies": [strategy_to_dict(s) for s in catalog],
        "riskPlans": {
            RiskLevel.HIGH.value: {
                "strategies": list(_HIGH_IDS), "timing": Timing.IMMEDIATE.value},
            RiskLevel.MEDIUM.value: {
                "strategies": [_MEDIUM_ERRATIC_ID, _MEDIUM_DELAYED_ID, *_MEDIUM_ALWAYS_IDS],
                "conditionalOn": {_MEDIUM_ERRATIC_ID: "erratic",
                                  _MEDIUM_DELAYED_ID: "delayed"},
                "timing": Timing.AFTER_QUIZ_WINDOW.value},
            RiskLevel.LOW.value: {
                "strategies": list(_LOW_IDS), "timing": Timing.AT_COURSE_CHECKPOINT.value},
            RiskLevel.ENGAGED.value: {
                "strategies": list(_ENGAGED_IDS),
                "timing": Timing.AT_COURSE_CHECKPOINT.value},
        },
    }
    return (json.dumps(payload, sort_keys=True, indent=2) + "\n").encode()


def catalog_from_json(data: bytes | str) -> tuple[InterventionStrategy, ...]:
    payload = json.loads(data)
    catalog = tuple(strategy_from_dict(s) for s in payload["strategies"])
    by_id = {s.id for s in catalog}
    for level, plan in payload.get("riskPlans", {}).items():
        for sid in plan["strategies"]:
            if sid not in by_id:
                raise CatalogMissing(f"risk plan {level} references unknown strategy {sid}")
    return catalog


def write_decisions_jsonl(store: PlanStore) -> bytes:
    lines = [json.dumps(event, sort_keys=True) for event in store.events()]
    return ("\n".join(lines) + "\n").encode() if lines else b""


def read_decisions_jsonl(data: bytes | str,
                         catalog: Sequence[InterventionStrategy] | None = None) -> PlanStore:
    text = data.decode() if isinstance(data, bytes) else data
    events = [json.loads(line) for line in text.splitlines() if line.strip()]
    return PlanStore.replay(events, catalog)

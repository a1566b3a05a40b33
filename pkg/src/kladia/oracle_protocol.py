"""Annual policy-update state machine.

Operator submissions are checked for internal consistency, aggregated by
lower-median, published into a fixed 72-hour challenge window, and only
an undisputed, expired window may be executed by the 5-of-8 policy
executor. Disputes without a timely correction lapse to the last
confirmed g. Nothing on this surface accepts an externally chosen g.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timedelta
from enum import Enum
from typing import Iterable, Optional

from . import fixedpoint as fp
from .canonical import content_hash
from .debt_index import BaselineRef, compute_bdi, compute_weights, normalize, policy_factor
from .errors import (
    DuplicateSubmission,
    InconsistentPayload,
    InsufficientApprovals,
    NoSubmissions,
    NotExecutable,
    QuorumNotMet,
    SubmissionsClosed,
    UnknownOperator,
    WindowClosed,
)
from .ledger import LedgerState, begin_cycle
from .policy import PolicyParams
from .weo_ingest import ALL_BLOCS, Bloc, BlocObservation, ObservationStatus, WeoVintage

CHALLENGE_WINDOW = timedelta(hours=72)
CORRECTION_DEADLINE = timedelta(days=14)

EXECUTOR_POLICY_THRESHOLD = 5
EXECUTOR_POLICY_SIZE = 8


class WindowStatus(Enum):
    PENDING = "Pending"                  # submissions still open, window not started
    OPEN = "Open"
    EXPIRED_CLEAN = "ExpiredClean"
    DISPUTED = "Disputed"
    PAUSED = "PausedAwaitingCorrection"
    EXECUTED = "Executed"
    LAPSED = "LapsedToLastConfirmed"


@dataclass(frozen=True)
class SubmissionPayload:
    """Per-bloc inputs plus the derived index values one operator publishes."""

    debt_ratios: dict[Bloc, int]
    nominal_gdps: dict[Bloc, int]
    bdi: int
    x_norm: int
    g: int
    vintage_id: str
    dataset_hash: str

    def canonical(self) -> dict:
        return {
            "debt_ratios": {b.value: fp.to_str(v) for b, v in sorted(
                self.debt_ratios.items(), key=lambda kv: kv[0].value)},
            "nominal_gdps": {b.value: fp.to_str(v) for b, v in sorted(
                self.nominal_gdps.items(), key=lambda kv: kv[0].value)},
            "bdi": fp.to_str(self.bdi),
            "x_norm": fp.to_str(self.x_norm),
            "g": fp.to_str(self.g),
            "vintage_id": self.vintage_id,
            "dataset_hash": self.dataset_hash,
        }


@dataclass(frozen=True)
class OracleSubmission:
    operator_id: str
    payload: SubmissionPayload
    timestamp: datetime
    signature: str  # digest bound to (operator_id, canonical payload)

    @staticmethod
    def sign(operator_id: str, payload: SubmissionPayload, timestamp: datetime
             ) -> "OracleSubmission":
        sig = content_hash({"operator": operator_id, "payload": payload.canonical()})
        return OracleSubmission(operator_id, payload, timestamp, sig)


@dataclass(frozen=True)
class Flag:
    operator_id: str
    issue_code: str
    comment: str


@dataclass
class ChallengeWindow:
    opened_at: Optional[datetime] = None
    flags: list[Flag] = field(default_factory=list)
    status: WindowStatus = WindowStatus.PENDING
    paused_at: Optional[datetime] = None


@dataclass
class CycleRecord:
    cycle_year: int
    prior_confirmed_g: int
    submissions: list[OracleSubmission] = field(default_factory=list)
    median_payload: Optional[SubmissionPayload] = None
    window: ChallengeWindow = field(default_factory=ChallengeWindow)
    confirmed_g: Optional[int] = None
    carried_forward: bool = False
    halted: bool = False
    executed_at: Optional[datetime] = None

    def canonical(self) -> dict:
        return {
            "cycle_year": self.cycle_year,
            "prior_confirmed_g": fp.to_str(self.prior_confirmed_g),
            "submissions": [
                {"operator": s.operator_id, "signature": s.signature,
                 "timestamp": s.timestamp.isoformat(),
                 "payload": s.payload.canonical()}
                for s in self.submissions
            ],
            "median": self.median_payload.canonical() if self.median_payload else None,
            "status": self.window.status.value,
            "flags": [
                {"operator": f.operator_id, "issue_code": f.issue_code,
                 "comment": f.comment}
                for f in self.window.flags
            ],
            "confirmed_g": fp.to_str(self.confirmed_g)
            if self.confirmed_g is not None else None,
            "carried_forward": self.carried_forward,
        }


def build_payload(
    observations: list[BlocObservation],
    baseline: BaselineRef,
    lam: int,
    vintage: WeoVintage,
) -> SubmissionPayload:
    """Derive a fully consistent payload from raw bloc inputs."""
    weights = compute_weights(observations)
    bdi = compute_bdi(observations, weights)
    x_norm, x_excess = normalize(bdi, baseline)
    g = policy_factor(x_excess, lam)
    return SubmissionPayload(
        debt_ratios={o.bloc: o.debt_ratio for o in observations},
        nominal_gdps={o.bloc: o.nominal_gdp for o in observations},
        bdi=bdi,
        x_norm=x_norm,
        g=g,
        vintage_id=vintage.vintage_id,
        dataset_hash=vintage.dataset_hash,
    )


def _recompute_check(payload: SubmissionPayload, baseline: BaselineRef, lam: int) -> None:
    obs = [
        BlocObservation(
            b, payload.debt_ratios[b], payload.nominal_gdps[b],
            WeoVintage(payload.vintage_id, baseline.genesis_vintage.publication_date,
                       payload.dataset_hash),
            ObservationStatus.OBSERVED,
        )
        for b in ALL_BLOCS
    ]
    weights = compute_weights(obs)
    bdi = compute_bdi(obs, weights)
    x_norm, x_excess = normalize(bdi, baseline)
    g = policy_factor(x_excess, lam)
    if (bdi, x_norm, g) != (payload.bdi, payload.x_norm, payload.g):
        raise InconsistentPayload(
            f"recomputed (bdi={fp.to_str(bdi)}, x={fp.to_str(x_norm)}, "
            f"g={fp.to_str(g)}) != submitted"
        )


def submit(
    record: CycleRecord,
    submission: OracleSubmission,
    operator_registry: Iterable[str],
    baseline: BaselineRef,
    lam: int,
) -> CycleRecord:
    """Accept an operator submission after the internal-consistency recheck."""
    if record.window.status is not WindowStatus.PENDING:
        raise SubmissionsClosed("submissions close when the challenge window opens")
    if submission.operator_id not in set(operator_registry):
        raise UnknownOperator(submission.operator_id)
    if any(s.operator_id == submission.operator_id for s in record.submissions):
        raise DuplicateSubmission(submission.operator_id)
    _recompute_check(submission.payload, baseline, lam)
    record.submissions.append(submission)
    return record


def aggregate_median(record: CycleRecord, baseline: BaselineRef, lam: int
                     ) -> SubmissionPayload:
    """Lower-median of submitted BDIs; X and g recomputed from that BDI.

    Only submitted values can become canonical: for an even count the
    lower of the two middle values is taken, never a synthetic average.
    """
    if not record.submissions:
        raise NoSubmissions("no submissions to aggregate")
    ranked = sorted(record.submissions, key=lambda s: (s.payload.bdi, s.signature))
    idx = (len(ranked) - 1) // 2  # lower median
    chosen = ranked[idx].payload
    x_norm, x_excess = normalize(chosen.bdi, baseline)
    g = policy_factor(x_excess, lam)
    median = SubmissionPayload(
        debt_ratios=dict(chosen.debt_ratios),
        nominal_gdps=dict(chosen.nominal_gdps),
        bdi=chosen.bdi,
        x_norm=x_norm,
        g=g,
        vintage_id=chosen.vintage_id,
        dataset_hash=chosen.dataset_hash,
    )
    record.median_payload = median
    return median


def open_window(record: CycleRecord, now: datetime) -> CycleRecord:
    """Publish the median and start the 72-hour challenge window."""
    if record.median_payload is None:
        raise NoSubmissions("aggregate before opening the window")
    if record.window.status is not WindowStatus.PENDING:
        raise WindowClosed("window already opened")
    record.window.opened_at = now
    record.window.status = WindowStatus.OPEN
    return record


def flag(record: CycleRecord, operator_id: str, issue_code: str, comment: str
         ) -> CycleRecord:
    """Record a discrepancy flag; two distinct operators on one issue code
    (or a quorum pause) constitute a valid dispute."""
    if record.window.status is not WindowStatus.OPEN:
        raise WindowClosed(f"window is {record.window.status.value}")
    record.window.flags.append(Flag(operator_id, issue_code, comment))
    by_code: dict[str, set[str]] = {}
    for f in record.window.flags:
        by_code.setdefault(f.issue_code, set()).add(f.operator_id)
    if any(len(ops) >= 2 for ops in by_code.values()):
        record.window.status = WindowStatus.DISPUTED
    return record


def pause_by_governance(record: CycleRecord, quorum_met: bool, now: datetime
                        ) -> CycleRecord:
    """A quorum-passed pause motion moves the window to awaiting correction."""
    if record.window.status not in (WindowStatus.OPEN, WindowStatus.DISPUTED):
        raise WindowClosed(f"window is {record.window.status.value}")
    if not quorum_met:
        raise QuorumNotMet("pause motion did not meet quorum")
    record.window.status = WindowStatus.PAUSED
    record.window.paused_at = now
    return record


def resolve(
    record: CycleRecord,
    now: datetime,
    corrected_payload: Optional[SubmissionPayload],
    baseline: BaselineRef,
    lam: int,
) -> CycleRecord:
    """Total resolution function over the window's live states.

    Clean expiry becomes executable; a timely correction reopens a fresh
    window on the corrected value; a missed 14-day deadline lapses to the
    last confirmed g.
    """
    status = record.window.status
    if status is WindowStatus.OPEN:
        assert record.window.opened_at is not None
        if now >= record.window.opened_at + CHALLENGE_WINDOW:
            record.window.status = WindowStatus.EXPIRED_CLEAN
        return record
    if status in (WindowStatus.DISPUTED, WindowStatus.PAUSED):
        anchor = record.window.paused_at or record.window.opened_at
        assert anchor is not None
        if corrected_payload is not None:
            if now <= anchor + CORRECTION_DEADLINE:
                _recompute_check(corrected_payload, baseline, lam)
                record.median_payload = corrected_payload
                record.window = ChallengeWindow(
                    opened_at=now, status=WindowStatus.OPEN
                )
                return record
        if now > anchor + CORRECTION_DEADLINE:
            record.window.status = WindowStatus.LAPSED
            record.confirmed_g = record.prior_confirmed_g
            record.carried_forward = True
        return record
    return record


def execute(
    record: CycleRecord,
    ledger_state: LedgerState,
    params: PolicyParams,
    approvals: Iterable[str],
    executor_signers: Iterable[str],
    now: datetime,
) -> tuple[CycleRecord, LedgerState, PolicyParams]:
    """Confirm the median g and refresh the ledger's annual factors.

    Requires a cleanly expired window and 5-of-8 executor approvals.
    """
    if record.window.status is not WindowStatus.EXPIRED_CLEAN:
        raise NotExecutable(f"window is {record.window.status.value}")
    if record.halted:
        raise NotExecutable("policy execution is halted by governance")
    signers = set(executor_signers)
    valid = set(approvals) & signers
    if len(valid) < EXECUTOR_POLICY_THRESHOLD:
        raise InsufficientApprovals(
            f"executor: {len(valid)} of required {EXECUTOR_POLICY_THRESHOLD}"
        )
    assert record.median_payload is not None
    record.confirmed_g = record.median_payload.g
    record.carried_forward = False
    record.window.status = WindowStatus.EXECUTED
    record.executed_at = now
    new_ledger, cycle_params = begin_cycle(ledger_state, params, record.confirmed_g)
    return record, new_ledger, cycle_params


def emergency_halt(record: CycleRecord, quorum_met: bool) -> CycleRecord:
    """Disable execution without touching any confirmed value."""
    if not quorum_met:
        raise QuorumNotMet("halt vote did not meet quorum")
    record.halted = True
    return record


def restore(record: CycleRecord, quorum_met: bool) -> CycleRecord:
    """Lift an emergency halt; normal operation resumes under the same g."""
    if not quorum_met:
        raise QuorumNotMet("restore vote did not meet quorum")
    record.halted = False
    return record

"""Exception hierarchy for the policy engine.

Every error raised by the engine derives from KladiaError so callers
(CLI, simulator) can map failures to exit codes uniformly.
"""


class KladiaError(Exception):
    """Base class for all engine errors."""


# --- ingestion ---------------------------------------------------------------

class MalformedFile(KladiaError):
    pass


class DuplicateBloc(KladiaError):
    pass


class NegativeValue(KladiaError):
    pass


class NoPriorValue(KladiaError):
    pass


# --- index -------------------------------------------------------------------

class IncompleteBlocSet(KladiaError):
    pass


class BlocSetMismatch(KladiaError):
    pass


class BaselineNotFrozen(KladiaError):
    pass


class BaselineFrozen(KladiaError):
    """Attempted mutation of a frozen baseline."""


class NonPositiveLambda(KladiaError):
    pass


# --- ledger ------------------------------------------------------------------

class AllocationMismatch(KladiaError):
    pass


class NoMintAfterGenesis(KladiaError):
    pass


class CliffActive(KladiaError):
    pass


class VestingComplete(KladiaError):
    pass


class InsufficientApprovals(KladiaError):
    pass


class ZeroCap(KladiaError):
    """Release cap is exhausted; a release would move zero tokens."""


class InsufficientFeePool(KladiaError):
    pass


class CrossBucketRelock(KladiaError):
    pass


class RelockExceedsRelease(KladiaError):
    pass


class ConservationViolation(KladiaError):
    """Supply conservation check failed; the transition is aborted."""


# --- oracle protocol ---------------------------------------------------------

class UnknownOperator(KladiaError):
    pass


class InconsistentPayload(KladiaError):
    pass


class DuplicateSubmission(KladiaError):
    pass


class SubmissionsClosed(KladiaError):
    pass


class NoSubmissions(KladiaError):
    pass


class WindowClosed(KladiaError):
    pass


class QuorumNotMet(KladiaError):
    pass


class NotExecutable(KladiaError):
    pass


# --- governance --------------------------------------------------------------

class InsufficientStake(KladiaError):
    pass


class InvalidImmutable(KladiaError):
    pass


class OutOfBounds(KladiaError):
    pass


class VotingClosed(KladiaError):
    pass


class ZeroPower(KladiaError):
    pass


class AlreadyFinalized(KladiaError):
    pass


class TimelockActive(KladiaError):
    pass


class NotQueued(KladiaError):
    pass


class ProposalConflict(KladiaError):
    """Another live proposal already touches one of these parameters."""


# --- reporting ---------------------------------------------------------------

class IncompleteCycle(KladiaError):
    pass


# --- simulator / cli ---------------------------------------------------------

class ScenarioInvalid(KladiaError):
    pass


class ShapeMismatch(KladiaError):
    pass


class ConfigError(KladiaError):
    pass

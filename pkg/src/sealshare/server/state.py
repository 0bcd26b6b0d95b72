"""Access-request lifecycle.

The happy path is SUBMITTED -> SEARCHING -> AWAITING_CONSENT ->
(GRANTED -> FULFILLED | DECLINED), with REVOKED reachable from GRANTED and
FULFILLED. Two error-handling edges exist beyond that: a failed search
evaluation retries via SEARCHING -> SUBMITTED, and the third failure lands
in the terminal FAILED state, visible to both parties.

`LEGAL_EDGES` is the single source of truth; the service layer and the
model-based tests both consume it.
"""

from __future__ import annotations

from enum import Enum

from ..errors import StateTransitionError


class Status(str, Enum):
    SUBMITTED = "SUBMITTED"
    SEARCHING = "SEARCHING"
    AWAITING_CONSENT = "AWAITING_CONSENT"
    GRANTED = "GRANTED"
    DECLINED = "DECLINED"
    FULFILLED = "FULFILLED"
    REVOKED = "REVOKED"
    FAILED = "FAILED"


LEGAL_EDGES: frozenset[tuple[Status, Status]] = frozenset({
    (Status.SUBMITTED, Status.SEARCHING),
    (Status.SEARCHING, Status.AWAITING_CONSENT),
    (Status.SEARCHING, Status.SUBMITTED),   # search retry
    (Status.SEARCHING, Status.FAILED),      # retries exhausted
    (Status.AWAITING_CONSENT, Status.GRANTED),
    (Status.AWAITING_CONSENT, Status.DECLINED),
    (Status.GRANTED, Status.FULFILLED),
    (Status.GRANTED, Status.REVOKED),
    (Status.FULFILLED, Status.REVOKED),
})

TERMINAL = frozenset({Status.DECLINED, Status.REVOKED, Status.FAILED})


def check_transition(current: Status, target: Status) -> None:
    if (current, target) not in LEGAL_EDGES:
        raise StateTransitionError(f"illegal transition {current.value} -> {target.value}")


class RequestMachine:
    """Pure state machine; the model-based test drives thousands of these."""

    def __init__(self) -> None:
        self.status = Status.SUBMITTED
        self.history: list[Status] = [Status.SUBMITTED]

    def transition(self, target: Status) -> Status:
        check_transition(self.status, target)
        self.status = target
        self.history.append(target)
        return target

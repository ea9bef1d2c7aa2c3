"""Executable certified-deletion encryption protocol."""

from .params import ProtocolParams
from .roles import (
    BOB_ROLES,
    BobRole,
    ColludingClassicalBob,
    EveRole,
    HonestBob,
    MeasureEarlyBob,
    PassiveEve,
    RandomCertificateBob,
    SabotageBob,
)
from .run import (
    Outcome,
    RunResult,
    alice_deletion_test,
    alice_test_phase1,
    code_for,
    draw_source,
    run_protocol,
)
from .transcript import TIME_TAGS, Channel, Event, Transcript

__all__ = [
    "BOB_ROLES",
    "BobRole",
    "Channel",
    "ColludingClassicalBob",
    "EveRole",
    "Event",
    "HonestBob",
    "MeasureEarlyBob",
    "Outcome",
    "PassiveEve",
    "ProtocolParams",
    "RandomCertificateBob",
    "RunResult",
    "SabotageBob",
    "TIME_TAGS",
    "Transcript",
    "alice_deletion_test",
    "alice_test_phase1",
    "code_for",
    "draw_source",
    "run_protocol",
]

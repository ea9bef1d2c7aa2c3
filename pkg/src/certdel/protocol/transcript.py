"""Event log of a protocol run.

Every channel message, local test, randomness reveal and party output is an
:class:`Event`. Payload fields are bit strings (``uint8`` arrays of 0/1),
trit strings (encoded with two bits per trit) or small integers; the event
serializes them as one concatenated bit string.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..crypto import bits_to_hex
from ..errors import ProtocolOrderError

TIME_TAGS = ("t1'", "t1''", "t1", "t2", "t3", "t3_dot", "t3_ddot", "t4'", "t4", "t5'", "t5")
TIME_RANK = {t: i for i, t in enumerate(TIME_TAGS)}


def trits_to_bits(trits) -> np.ndarray:
    t = np.asarray(trits, dtype=np.int64).ravel()
    out = np.empty(2 * t.size, dtype=np.uint8)
    out[0::2] = t & 1
    out[1::2] = (t >> 1) & 1
    return out


def _field_bits(kind: str, value) -> np.ndarray:
    if kind == "bits":
        return np.asarray(value, dtype=np.uint8).ravel()
    if kind == "trits":
        return trits_to_bits(value)
    if kind == "mask":
        return np.asarray(value, dtype=bool).astype(np.uint8).ravel()
    if kind == "flag":
        return np.array([int(bool(value))], dtype=np.uint8)
    raise ValueError(f"unknown payload kind {kind!r}")


@dataclass
class Event:
    time_tag: str
    sender: str
    receiver: str
    label: str
    fields: dict = field(default_factory=dict)  # name -> (kind, value)

    def payload_bits(self) -> np.ndarray:
        parts = [_field_bits(k, v) for k, v in self.fields.values()]
        return np.concatenate(parts) if parts else np.zeros(0, dtype=np.uint8)

    def get(self, name):
        return self.fields[name][1]

    def to_dict(self) -> dict:
        bits = self.payload_bits()
        return {
            "time_tag": self.time_tag,
            "sender": self.sender,
            "receiver": self.receiver,
            "label": self.label,
            "payload_hex": bits_to_hex(bits),
            "bit_len": int(bits.size),
        }


class Transcript:
    """Time-ordered events plus Eve's copies of channel messages."""

    def __init__(self):
        self.events: list[Event] = []
        self.eve_view: list[Event] = []
        self.parameters: dict = {}

    def record(self, event: Event) -> Event:
        if event.time_tag not in TIME_RANK:
            raise ProtocolOrderError(f"unknown time tag {event.time_tag!r}")
        if self.events and TIME_RANK[event.time_tag] < TIME_RANK[self.events[-1].time_tag]:
            raise ProtocolOrderError(
                f"event {event.label!r} at {event.time_tag} after an event at {self.events[-1].time_tag}"
            )
        self.events.append(event)
        return event

    def is_ordered(self) -> bool:
        ranks = [TIME_RANK[e.time_tag] for e in self.events]
        return all(a <= b for a, b in zip(ranks, ranks[1:]))

    def channel_messages(self) -> list[Event]:
        return [e for e in self.events if e.sender in ("Alice", "Bob") and e.receiver in ("Alice", "Bob")]

    def released_to(self, party: str, before: str | None = None) -> list[Event]:
        """Events a party observes, optionally only those strictly before a time tag."""
        out = []
        for e in self.events:
            if before is not None and TIME_RANK[e.time_tag] >= TIME_RANK[before]:
                continue
            if e.receiver in (party, "all") or e.sender == party:
                out.append(e)
        if party == "Eve":
            out = [e for e in self.eve_view if before is None or TIME_RANK[e.time_tag] < TIME_RANK[before]] + [
                e for e in out if e.receiver == "all"
            ]
        return out

    def to_dict(self) -> dict:
        return {
            "events": [e.to_dict() for e in self.events],
            "eve_view": [e.to_dict() for e in self.eve_view],
        }


class Channel:
    """Authenticated classical channel that hands Eve a copy of every message."""

    def __init__(self, transcript: Transcript, eve=None):
        self.transcript = transcript
        self.eve = eve

    def send(self, time_tag: str, sender: str, receiver: str, label: str, eve_tag: str | None = None, **fields):
        sent = Event(time_tag, sender, receiver, label, dict(fields))
        self.transcript.record(sent)
        copy = Event(eve_tag or time_tag, sender, receiver, label, dict(fields))
        self.transcript.eve_view.append(copy)
        if self.eve is not None:
            self.eve.observe(copy)
        delivered = {k: v for k, (_, v) in sent.fields.items()}
        return delivered

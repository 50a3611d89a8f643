import enum
from dataclasses import dataclass

import numpy as np

from .errors import PatternViolation
from .parties import PartyKind
from .transcript import Message

# Round 0 is reserved for the referee's public-randomness broadcast. It carries
# no input-dependent data, so pattern rules skip it.
SETUP_ROUND = 0


class PatternKind(enum.Enum):
    NON_INTERACTIVE = "non-interactive"
    LOCAL_THEN_CURATOR = "local-then-curator"
    CURATOR_THEN_LOCAL = "curator-then-local"
    GENERAL = "general"


@dataclass(frozen=True)
class InteractionPattern:
    kind: PatternKind
    max_rounds: int = 1

    def __post_init__(self):
        if self.max_rounds < 1:
            raise ValueError("max_rounds must be positive")

    @classmethod
    def non_interactive(cls):
        return cls(PatternKind.NON_INTERACTIVE, 1)

    @classmethod
    def local_then_curator(cls, max_rounds=3):
        return cls(PatternKind.LOCAL_THEN_CURATOR, max_rounds)

    @classmethod
    def curator_then_local(cls, max_rounds=3):
        return cls(PatternKind.CURATOR_THEN_LOCAL, max_rounds)

    @classmethod
    def general(cls, max_rounds=64):
        return cls(PatternKind.GENERAL, max_rounds)

    @classmethod
    def parse(cls, text):
        name, _, rounds = text.partition(":")
        kind = PatternKind(name.strip())
        if rounds:
            return cls(kind, int(rounds))
        return {
            PatternKind.NON_INTERACTIVE: cls.non_interactive,
            PatternKind.LOCAL_THEN_CURATOR: cls.local_then_curator,
            PatternKind.CURATOR_THEN_LOCAL: cls.curator_then_local,
            PatternKind.GENERAL: cls.general,
        }[kind]()

    def __str__(self):
        return f"{self.kind.value}:{self.max_rounds}"


class PatternChecker:
    """Incremental conformance check; ``feed`` raises on the first bad entry."""

    def __init__(self, pattern):
        self.pattern = pattern
        self.last_round = -1
        self.rounds = set()
        self.agent_rounds = (None, None)
        self.curator_rounds = (None, None)
        self.curator_sends = 0
        self.agent_senders = np.zeros(0, dtype=bool)

    def feed(self, entry):
        rnd = entry.round
        if rnd < self.last_round:
            raise PatternViolation(f"round {rnd} after round {self.last_round}")
        self.last_round = rnd
        if isinstance(entry, Message):
            sender, receiver = entry.sender.kind, entry.receiver.kind
            agent_ids = np.array([entry.sender.index if sender == PartyKind.AGENT else entry.receiver.index])
        else:
            sender, receiver = entry.sender_kind, entry.receiver_kind
            agent_ids = entry.indices
        if rnd == SETUP_ROUND:
            if sender != PartyKind.REFEREE:
                raise PatternViolation("only the referee may send in the setup round")
            return
        self.rounds.add(rnd)
        if len(self.rounds) > self.pattern.max_rounds:
            raise PatternViolation(
                f"{len(self.rounds)} communication rounds exceed the pattern's {self.pattern.max_rounds}"
            )
        other = receiver if sender == PartyKind.REFEREE else sender
        if other == PartyKind.AGENT:
            self.agent_rounds = _span(self.agent_rounds, rnd)
        else:
            self.curator_rounds = _span(self.curator_rounds, rnd)
        kind = self.pattern.kind
        if kind == PatternKind.NON_INTERACTIVE:
            self._non_interactive(sender, agent_ids)
        elif kind == PatternKind.LOCAL_THEN_CURATOR:
            if self.curator_rounds[0] is not None and self.agent_rounds[1] is not None:
                if self.agent_rounds[1] >= self.curator_rounds[0]:
                    raise PatternViolation("agent exchange at or after the first curator exchange")
        elif kind == PatternKind.CURATOR_THEN_LOCAL:
            if self.curator_rounds[1] is not None and self.agent_rounds[0] is not None:
                if self.curator_rounds[1] >= self.agent_rounds[0]:
                    raise PatternViolation("curator exchange at or after the first agent exchange")

    def _non_interactive(self, sender, agent_ids):
        if len(self.rounds) > 1:
            raise PatternViolation("non-interactive protocols use a single round")
        if sender == PartyKind.REFEREE:
            raise PatternViolation("non-interactive protocols have no referee-to-party messages")
        if sender == PartyKind.CURATOR:
            self.curator_sends += 1
            if self.curator_sends > 1:
                raise PatternViolation("curator sent twice")
            return
        top = int(agent_ids.max()) + 1 if len(agent_ids) else 0
        if top > len(self.agent_senders):
            grown = np.zeros(max(top, 2 * len(self.agent_senders)), dtype=bool)
            grown[: len(self.agent_senders)] = self.agent_senders
            self.agent_senders = grown
        if self.agent_senders[agent_ids].any() or len(np.unique(agent_ids)) != len(agent_ids):
            raise PatternViolation("an agent sent twice")
        self.agent_senders[agent_ids] = True


def _span(span, rnd):
    lo, hi = span
    return (rnd if lo is None else min(lo, rnd), rnd if hi is None else max(hi, rnd))


def validate_pattern(transcript, pattern):
    """True iff every ordering constraint of ``pattern`` holds on ``transcript``."""
    checker = PatternChecker(pattern)
    try:
        for entry in transcript.entries:
            checker.feed(entry)
    except PatternViolation:
        return False
    return True

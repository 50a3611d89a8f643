"""Bulk-synchronous execution of hybrid-model protocols.

A protocol is written from the referee's point of view (``ProtocolSpec.referee``).
The referee never touches inputs: it hands party-side behaviors to the
session, which runs them on the parties' own records with the parties' own
random streams, records the resulting messages, enforces the interaction
pattern, and charges the privacy ledger.
"""

import math
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .codec import encode_payload
from .errors import PatternViolation
from .ledger import PrivacyLedger
from .parties import CURATOR, REFEREE, PartyKind, agent
from .patterns import SETUP_ROUND, InteractionPattern, PatternChecker
from .rng import RngStream, derive_seed
from .transcript import AgentBlock, Message, Transcript

TAG_SHARED_SEED = 0


@dataclass
class AgentContext:
    """What a group of agents sees when asked to respond in one round."""

    indices: np.ndarray
    records: Any
    rng: np.random.Generator
    query: dict | None
    shared_seed: int | None


@dataclass
class CuratorContext:
    records: Any
    rng: np.random.Generator
    query: dict | None
    charge: Callable = field(repr=False)


@dataclass(frozen=True)
class Delivery:
    """Handle for a referee-to-party send; pass it back when the parties reply."""

    round: int
    indices: np.ndarray | None
    fields: dict


class ProtocolSpec:
    """Base class for hybrid-model protocols.

    Subclasses implement ``referee(session)`` and may override
    ``encode_output`` to serialize the referee's result into the output register.
    """

    name = "protocol"

    def referee(self, session):
        raise NotImplementedError

    def encode_output(self, result):
        if result is None:
            return None
        if isinstance(result, (bytes, bytearray)):
            return bytes(result)
        return encode_payload(0xFF, result)


class Session:
    def __init__(self, curator_input, agent_inputs, pattern, ledger, seed):
        self.curator_input = curator_input
        self.agent_inputs = agent_inputs
        self.pattern = pattern
        self.ledger = ledger
        self.seed = int(seed)
        self.transcript = Transcript()
        self._checker = PatternChecker(pattern)
        self._shared_seed = None
        self._simulated = None
        self._simulated_agents = None

    @property
    def n(self):
        if self._simulated_agents is not None:
            return len(self._simulated_agents[0])
        return 0 if self.agent_inputs is None else len(self.agent_inputs)

    @property
    def m(self):
        if self._simulated is not None:
            return len(self._simulated[0])
        return 0 if self.curator_input is None else len(self.curator_input)

    def _record(self, entry, checked=False):
        if not checked:
            self._checker.feed(entry)
        if isinstance(entry, Message):
            self.transcript.append(entry)
        else:
            self.transcript.add_block(entry)

    def referee_rng(self, round, salt=0):
        return RngStream(self.seed, REFEREE, round, salt).generator()

    def shared_seed(self):
        """Public random seed, broadcast to every agent in the setup round."""
        if self._shared_seed is None:
            self._shared_seed = derive_seed(self.seed, 0x5EED)
            if self.n and self._simulated_agents is None:
                value = np.int64(np.uint64(self._shared_seed).view(np.int64))
                block = AgentBlock(SETUP_ROUND, False, np.arange(self.n), TAG_SHARED_SEED, [[value]])
                self._record(block)
        return self._shared_seed

    def all_agents(self):
        return np.arange(self.n, dtype=np.int64)

    def to_agents(self, round, indices, tag, **columns):
        indices = np.asarray(indices, dtype=np.int64)
        self._require_round(round)
        if self._simulated_agents is None:
            self._record(AgentBlock(round, False, indices, tag, list(columns.values())))
        return Delivery(round, indices, columns)

    def from_agents(self, round, indices, behavior, tag, epsilon, query=None):
        """Run ``behavior`` for each listed agent and record their replies.

        ``behavior(ctx)`` receives an ``AgentContext`` for the whole group and
        returns a dict of equal-length integer columns, one row per agent.
        Each agent is charged ``epsilon``.
        """
        indices = np.asarray(indices, dtype=np.int64)
        self._require_round(round)
        if query is not None:
            if query.indices is None or not np.array_equal(query.indices, indices):
                raise PatternViolation("reply group differs from the group the query was sent to")
            if query.round >= round:
                raise PatternViolation("reply must come in a later round than its query")
        if len(indices) == 0:
            return {}
        if self._simulated_agents is not None:
            records, rng = self._simulated_agents
            ctx = AgentContext(indices, _take(records, indices), rng, None if query is None else query.fields, self._shared_seed)
            return behavior(ctx)
        # pattern is checked before any agent computes or is charged
        self._checker.feed(AgentBlock(round, True, indices, tag, []))
        first = int(indices.min())
        rng = RngStream(self.seed, agent(first), round, salt=1).generator()
        ctx = AgentContext(
            indices=indices,
            records=_take(self.agent_inputs, indices),
            rng=rng,
            query=None if query is None else query.fields,
            shared_seed=self._shared_seed,
        )
        self.ledger.charge_agents(indices, epsilon, round)
        columns = behavior(ctx)
        block = AgentBlock(round, True, indices, tag, list(columns.values()))
        self._record(block, checked=True)
        return columns

    def to_curator(self, round, tag, **fields):
        self._require_round(round)
        if self._simulated is None:
            self._record(Message(round, REFEREE, CURATOR, encode_payload(tag, *fields.values())))
        return Delivery(round, None, fields)

    def from_curator(self, round, behavior, tag, query=None):
        """Run the curator's ``behavior(ctx)``; it returns a dict of fields for its message."""
        self._require_round(round)
        if query is not None and query.round >= round:
            raise PatternViolation("reply must come in a later round than its query")
        if self._simulated is not None:
            records, rng = self._simulated
            ctx = CuratorContext(records, rng, None if query is None else query.fields, _no_charge)
            return behavior(ctx)
        self._checker.feed(Message(round, CURATOR, REFEREE, b""))
        rng = RngStream(self.seed, CURATOR, round).generator()

        def charge(epsilon, partition_tag=None):
            self.ledger.charge(CURATOR, epsilon, partition_tag, round)

        ctx = CuratorContext(self.curator_input, rng, None if query is None else query.fields, charge)
        fields = behavior(ctx)
        self._record(Message(round, CURATOR, REFEREE, encode_payload(tag, *fields.values())), checked=True)
        return fields

    @contextmanager
    def simulating_curator(self, records, rng):
        """Within the block the referee runs the curator's code itself on ``records``.

        No curator messages are recorded and nothing is charged: the records
        are the referee's own synthetic draws, not anyone's private data.
        """
        previous = self._simulated
        self._simulated = (records, rng)
        try:
            yield
        finally:
            self._simulated = previous

    @contextmanager
    def simulating_agents(self, records, rng):
        """Agent-side counterpart of ``simulating_curator``."""
        previous = self._simulated_agents
        self._simulated_agents = (records, rng)
        try:
            yield
        finally:
            self._simulated_agents = previous

    def _require_round(self, round):
        if round <= SETUP_ROUND:
            raise PatternViolation("round 0 is reserved for the shared-randomness broadcast")


def _take(records, indices):
    # contiguous groups get a view instead of a fancy-indexed copy
    if len(indices) and indices[-1] - indices[0] + 1 == len(indices) and np.all(np.diff(indices) == 1):
        return records[int(indices[0]) : int(indices[-1]) + 1]
    return records[indices]


def _no_charge(epsilon, partition_tag=None):
    return None


def run_protocol(spec, curator_input, agent_inputs, pattern, ledger=None, seed=0):
    """Execute ``spec`` and return ``(output, transcript)``.

    The run is a pure function of the inputs and ``seed``. Raises
    ``PatternViolation`` or ``BudgetExceeded`` on the offending send or charge.
    """
    n = 0 if agent_inputs is None else len(agent_inputs)
    if ledger is None:
        ledger = PrivacyLedger(math.inf, n)
    if not isinstance(pattern, InteractionPattern):
        raise TypeError("pattern must be an InteractionPattern")
    session = Session(curator_input, agent_inputs, pattern, ledger, seed)
    output = spec.referee(session)
    session.transcript.output = spec.encode_output(output)
    return output, session.transcript


__all__ = [
    "AgentContext",
    "CuratorContext",
    "Delivery",
    "ProtocolSpec",
    "Session",
    "run_protocol",
    "PartyKind",
]

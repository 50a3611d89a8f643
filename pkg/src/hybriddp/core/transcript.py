import hashlib
import io
from dataclasses import dataclass

import numpy as np

from .codec import encode_int_rows
from .errors import TopologyError
from .parties import REFEREE, PartyId, PartyKind, agent


@dataclass(frozen=True)
class Message:
    round: int
    sender: PartyId
    receiver: PartyId
    payload: bytes

    def __post_init__(self):
        if self.round < 0:
            raise ValueError("round must be nonnegative")
        if self.sender == self.receiver:
            raise TopologyError("sender and receiver coincide")
        if (self.sender.kind == PartyKind.REFEREE) == (self.receiver.kind == PartyKind.REFEREE):
            raise TopologyError("exactly one endpoint of every message must be the referee")

    def line(self):
        return f"{self.round},{self.sender},{self.receiver},{self.payload.hex()}"


class AgentBlock:
    """All messages exchanged between the referee and a set of agents in one round.

    Stored column-wise so that rounds with millions of agents stay cheap; the
    block expands to ordinary ``Message`` objects on iteration. ``upstream``
    blocks are agent-to-referee, the others referee-to-agent. Columns of
    length one are broadcast (the same field value in every message).
    """

    __slots__ = ("round", "upstream", "indices", "tag", "columns")

    def __init__(self, round, upstream, indices, tag, columns):
        if round < 0:
            raise ValueError("round must be nonnegative")
        self.round = int(round)
        self.upstream = bool(upstream)
        self.indices = np.asarray(indices, dtype=np.int64)
        self.tag = int(tag)
        cols = []
        for col in columns:
            col = np.atleast_1d(np.asarray(col, dtype=np.int64))
            if len(col) not in (1, len(self.indices)):
                raise ValueError("column length must be 1 or match the agent count")
            cols.append(col)
        self.columns = tuple(cols)

    def __len__(self):
        return len(self.indices)

    @property
    def sender_kind(self):
        return PartyKind.AGENT if self.upstream else PartyKind.REFEREE

    @property
    def receiver_kind(self):
        return PartyKind.REFEREE if self.upstream else PartyKind.AGENT

    def payload_rows(self):
        count = len(self.indices)
        cols = [np.broadcast_to(c, (count,)) for c in self.columns]
        if not cols:
            return np.full((count, 1), self.tag, dtype=np.uint8)
        return encode_int_rows(self.tag, cols)

    def __iter__(self):
        rows = self.payload_rows()
        for i, idx in enumerate(self.indices):
            party = agent(idx)
            if self.upstream:
                yield Message(self.round, party, REFEREE, rows[i].tobytes())
            else:
                yield Message(self.round, REFEREE, party, rows[i].tobytes())

    def lines(self):
        rows = self.payload_rows()
        for i, idx in enumerate(self.indices):
            hexed = rows[i].tobytes().hex()
            if self.upstream:
                yield f"{self.round},agent{idx},referee,{hexed}"
            else:
                yield f"{self.round},referee,agent{idx},{hexed}"


class Transcript:
    """Ordered record of a protocol run plus the referee's output register."""

    def __init__(self, messages=(), output=None):
        self.entries = []
        self.output = output
        for msg in messages:
            self.append(msg)

    def append(self, message):
        self._check_order(message.round)
        self.entries.append(message)

    def add_block(self, block):
        if len(block) == 0:
            return
        self._check_order(block.round)
        self.entries.append(block)

    def _check_order(self, round):
        if self.entries and round < self.entries[-1].round:
            raise ValueError(f"round {round} after round {self.entries[-1].round}")

    def __iter__(self):
        for entry in self.entries:
            if isinstance(entry, Message):
                yield entry
            else:
                yield from entry

    def __len__(self):
        return sum(1 if isinstance(e, Message) else len(e) for e in self.entries)

    @property
    def messages(self):
        return list(self)

    @property
    def rounds(self):
        return sorted({e.round for e in self.entries})

    def message_count(self):
        """Every message, including referee-to-party ones."""
        return len(self)

    def party_message_count(self):
        """Messages sent by the curator or agents (the referee's own sends excluded)."""
        total = 0
        for e in self.entries:
            if isinstance(e, Message):
                total += e.sender.kind != PartyKind.REFEREE
            elif e.upstream:
                total += len(e)
        return total

    def sent_by(self, party):
        """Payloads of every message ``party`` sent, in order."""
        return self._payloads(party, sent=True)

    def received_by(self, party):
        return self._payloads(party, sent=False)

    def _payloads(self, party, sent):
        out = []
        for e in self.entries:
            if isinstance(e, Message):
                if (e.sender if sent else e.receiver) == party:
                    out.append(e.payload)
            elif e.upstream == sent and party.kind == PartyKind.AGENT:
                hits = np.flatnonzero(e.indices == party.index)
                if len(hits):
                    pos = int(hits[0])
                    cols = [c[pos : pos + 1] if len(c) > 1 else c for c in e.columns]
                    if cols:
                        out.append(encode_int_rows(e.tag, cols)[0].tobytes())
                    else:
                        out.append(bytes([e.tag]))
        return out

    def lines(self):
        for entry in self.entries:
            if isinstance(entry, Message):
                yield entry.line()
            else:
                yield from entry.lines()
        yield "output," + ("none" if self.output is None else self.output.hex())

    def dump(self, fh=None):
        """Write the text format; returns the string when no file is given."""
        sink = io.StringIO() if fh is None else fh
        for line in self.lines():
            sink.write(line)
            sink.write("\n")
        if fh is None:
            return sink.getvalue()
        return None

    def digest(self):
        h = hashlib.sha256()
        for line in self.lines():
            h.update(line.encode())
            h.update(b"\n")
        return h.hexdigest()

    @classmethod
    def load(cls, source):
        text = source if isinstance(source, str) else source.read()
        transcript = cls()
        saw_output = False
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line:
                continue
            if saw_output:
                raise ValueError(f"line {lineno}: content after output line")
            if line.startswith("output,"):
                value = line[len("output,") :]
                transcript.output = None if value == "none" else bytes.fromhex(value)
                saw_output = True
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise ValueError(f"line {lineno}: expected round,sender,receiver,hex")
            rnd, sender, receiver, payload = parts
            transcript.append(
                Message(int(rnd), PartyId.parse(sender), PartyId.parse(receiver), bytes.fromhex(payload))
            )
        if not saw_output:
            raise ValueError("missing trailing output line")
        return transcript

    def __eq__(self, other):
        if not isinstance(other, Transcript):
            return NotImplemented
        return self.output == other.output and list(self.lines()) == list(other.lines())

    def __repr__(self):
        return f"Transcript({len(self)} messages, rounds={self.rounds}, output={self.output!r})"

import enum
import re
from dataclasses import dataclass


class PartyKind(enum.IntEnum):
    CURATOR = 0
    AGENT = 1
    REFEREE = 2


_NAMES = {PartyKind.CURATOR: "curator", PartyKind.REFEREE: "referee"}
_AGENT_RE = re.compile(r"agent(\d+)\Z")


@dataclass(frozen=True, order=True)
class PartyId:
    kind: PartyKind
    index: int = 0

    def __post_init__(self):
        if self.index < 0:
            raise ValueError("party index must be nonnegative")
        if self.kind != PartyKind.AGENT and self.index != 0:
            raise ValueError(f"{self.kind.name.lower()} is a singleton; index must be 0")

    def __str__(self):
        if self.kind == PartyKind.AGENT:
            return f"agent{self.index}"
        return _NAMES[self.kind]

    @classmethod
    def parse(cls, text):
        text = text.strip()
        for kind, name in _NAMES.items():
            if text == name:
                return cls(kind)
        match = _AGENT_RE.match(text)
        if match is None:
            raise ValueError(f"not a party name: {text!r}")
        return cls(PartyKind.AGENT, int(match.group(1)))


CURATOR = PartyId(PartyKind.CURATOR)
REFEREE = PartyId(PartyKind.REFEREE)


def agent(index):
    return PartyId(PartyKind.AGENT, int(index))

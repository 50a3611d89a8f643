"""Message-passing engine for hybrid-model protocols: parties, transcripts,
interaction patterns, privacy ledger and seeded random streams."""

from .codec import decode_payload, encode_payload, unpack_float, unpack_int, unpack_ints
from .engine import AgentContext, CuratorContext, Delivery, ProtocolSpec, Session, run_protocol
from .errors import BudgetExceeded, HybridDPError, PatternViolation, TopologyError
from .ledger import LedgerEntry, PrivacyLedger, charge
from .parties import CURATOR, REFEREE, PartyId, PartyKind, agent
from .patterns import InteractionPattern, PatternChecker, PatternKind, validate_pattern
from .rng import RngStream, derive_seed
from .transcript import AgentBlock, Message, Transcript

__all__ = [
    "AgentBlock",
    "AgentContext",
    "BudgetExceeded",
    "CURATOR",
    "CuratorContext",
    "Delivery",
    "HybridDPError",
    "InteractionPattern",
    "LedgerEntry",
    "Message",
    "PartyId",
    "PartyKind",
    "PatternChecker",
    "PatternKind",
    "PatternViolation",
    "PrivacyLedger",
    "ProtocolSpec",
    "REFEREE",
    "RngStream",
    "Session",
    "TopologyError",
    "Transcript",
    "agent",
    "charge",
    "decode_payload",
    "derive_seed",
    "encode_payload",
    "run_protocol",
    "unpack_float",
    "unpack_int",
    "unpack_ints",
    "validate_pattern",
]

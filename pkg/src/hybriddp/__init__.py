"""Protocol engine and simulator for the hybrid model of differential privacy,
where a trusted curator holding m records and n local-model agents talk to a
referee that writes the output."""

from .core import (
    BudgetExceeded,
    InteractionPattern,
    PartyId,
    PatternViolation,
    PrivacyLedger,
    Transcript,
    run_protocol,
    validate_pattern,
)
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BudgetExceeded",
    "InteractionPattern",
    "PartyId",
    "PatternViolation",
    "PrivacyLedger",
    "Transcript",
    "run_protocol",
    "validate_pattern",
]

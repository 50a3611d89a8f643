class HybridDPError(Exception):
    """Base class for errors raised by the protocol engine."""


class PatternViolation(HybridDPError):
    """A message was sent in an order the declared interaction pattern forbids."""


class BudgetExceeded(HybridDPError):
    """A privacy charge would push a party past its budget."""


class TopologyError(HybridDPError):
    """A message does not have the referee as exactly one endpoint."""

import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceeded
from .parties import PartyKind

_SLACK = 1e-9


@dataclass(frozen=True)
class LedgerEntry:
    party: str
    round: int
    epsilon: float
    tag: str | None
    count: int = 1


class PrivacyLedger:
    """Per-party accumulated epsilon under a common budget (pure DP, delta = 0).

    Untagged charges compose sequentially (they add). Charges that share a
    ``partition_tag`` are declared to touch disjoint parts of the party's data
    and compose in parallel: the tag contributes the largest of its charges.
    Agent charges are kept in an array so that millions of agents stay cheap.
    """

    delta = 0.0

    def __init__(self, budget, n_agents=0):
        if not budget > 0:
            raise ValueError("budget must be positive")
        self.budget = float(budget)
        self._sequential = defaultdict(float)
        self._parallel = defaultdict(dict)
        self._agents = np.zeros(int(n_agents), dtype=np.float64)
        self.entries = []

    def _grow(self, size):
        if size > len(self._agents):
            grown = np.zeros(size, dtype=np.float64)
            grown[: len(self._agents)] = self._agents
            self._agents = grown

    def total(self, party):
        base = self._sequential.get(party, 0.0)
        if party.kind == PartyKind.AGENT and party.index < len(self._agents):
            base += self._agents[party.index]
        return base + sum(self._parallel.get(party, {}).values())

    def charge(self, party, epsilon, partition_tag=None, round=-1):
        epsilon = float(epsilon)
        if epsilon < 0 or math.isnan(epsilon):
            raise ValueError("epsilon must be nonnegative")
        if epsilon == 0:
            return self
        if partition_tag is None:
            new_total = self.total(party) + epsilon
        else:
            tags = self._parallel.get(party, {})
            previous = tags.get(partition_tag, 0.0)
            new_total = self.total(party) + max(0.0, epsilon - previous)
        if new_total > self.budget + _SLACK:
            raise BudgetExceeded(f"{party}: {new_total:.6g} > budget {self.budget:.6g}")
        if partition_tag is None:
            self._sequential[party] += epsilon
        else:
            tags = self._parallel[party]
            tags[partition_tag] = max(tags.get(partition_tag, 0.0), epsilon)
        self.entries.append(LedgerEntry(str(party), round, epsilon, partition_tag))
        return self

    def charge_agents(self, indices, epsilon, round=-1):
        """Sequential charge of ``epsilon`` to each listed agent."""
        indices = np.asarray(indices, dtype=np.int64)
        epsilon = float(epsilon)
        if epsilon < 0:
            raise ValueError("epsilon must be nonnegative")
        if epsilon == 0 or len(indices) == 0:
            return self
        self._grow(int(indices.max()) + 1)
        after = self._agents[indices] + epsilon
        worst = float(after.max())
        if worst > self.budget + _SLACK:
            bad = int(indices[int(np.argmax(after))])
            raise BudgetExceeded(f"agent{bad}: {worst:.6g} > budget {self.budget:.6g}")
        np.add.at(self._agents, indices, epsilon)
        label = f"agents[{len(indices)}]"
        self.entries.append(LedgerEntry(label, round, epsilon, None, len(indices)))
        return self

    @property
    def agent_totals(self):
        return self._agents.copy()

    def parties(self):
        named = set(self._sequential) | set(self._parallel)
        return sorted(named)

    def max_total(self):
        totals = [self.total(p) for p in self.parties()]
        if len(self._agents):
            totals.append(float(self._agents.max()))
        return max(totals, default=0.0)

    def within_budget(self):
        return self.max_total() <= self.budget + _SLACK


def charge(ledger, party, epsilon, partition_tag=None):
    return ledger.charge(party, epsilon, partition_tag)

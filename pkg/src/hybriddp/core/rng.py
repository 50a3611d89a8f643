from dataclasses import dataclass

import numpy as np

from .parties import PartyId

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class RngStream:
    """Named random stream: the same ``(seed, party, round, salt)`` always yields the same draws.

    For a group of agents acting in one round, ``party`` is the group's first
    agent and ``salt`` is 1; draws are consumed in agent-index order.
    """

    seed: int
    party: PartyId
    round: int
    salt: int = 0

    def generator(self):
        key = (int(self.party.kind), int(self.party.index), int(self.round), int(self.salt))
        seq = np.random.SeedSequence(entropy=int(self.seed) & _MASK64, spawn_key=key)
        return np.random.Generator(np.random.PCG64(seq))


def derive_seed(seed, *labels):
    """Child 64-bit seed from a parent seed and a path of integer labels."""
    seq = np.random.SeedSequence(entropy=int(seed) & _MASK64, spawn_key=tuple(int(x) for x in labels))
    return int(seq.generate_state(1, dtype=np.uint64)[0])

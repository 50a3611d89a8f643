import numpy as np

from ..local import hadamard_aggregate, hadamard_encode, hadamard_rows, hadamard_size, heavy_hitters_from_estimate


def encode_items(session, items_of, domain, round, tag, epsilon, query=None, indices=None):
    """One heavy-hitters round: each agent sends one Hadamard-response bit about its item."""
    seed = session.shared_seed()
    indices = session.all_agents() if indices is None else indices
    rows = hadamard_rows(seed, session.n, hadamard_size(domain))

    def agents(ctx):
        return {"bit": hadamard_encode(items_of(ctx), rows[ctx.indices], epsilon, ctx.rng)}

    reply = session.from_agents(round, indices, agents, tag, epsilon, query=query)
    return hadamard_aggregate(rows[indices], reply["bit"], epsilon, domain)


def recover_shares(estimate, beta, slots, width):
    """Per-slot share from a heavy-hitters list over items ``slot * 2^width + value``.

    Returns ``(shares, complete)``. When a slot has several listed values the
    best-supported one wins. A slot with no listed value falls back to its
    highest estimate and marks the recovery incomplete, so the protocol can
    keep a fixed message schedule and still report the miss as a failure.
    """
    listed = heavy_hitters_from_estimate(estimate, beta)
    per_slot = np.asarray(estimate.counts[: slots << width]).reshape(slots, 1 << width)
    shares = np.argmax(per_slot, axis=1).astype(np.int64)
    best = np.full(slots, -np.inf)
    found = np.zeros(slots, dtype=bool)
    for item, count in listed.items.items():
        slot, value = divmod(item, 1 << width)
        if slot < slots and count > best[slot]:
            best[slot], shares[slot], found[slot] = count, value, True
    return shares, bool(found.all())

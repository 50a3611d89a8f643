"""1-out-of-2^d parity: agents first, then the curator.

Round 1: agents run heavy hitters on (t, s_t), or on a sentinel when their
record is a parity example. Round 2: the referee XORs the recovered shares
and sends s to the curator. Round 3: the curator learns the parity r_s from
its parity examples labeled by their s-th inner-product bit.
"""

import math

import numpy as np

from ..core import InteractionPattern, PrivacyLedger, ProtocolSpec, run_protocol
from ..core.codec import encode_payload
from ..curator import learn_parity_private
from ..local import TAG_HADAMARD
from ._shares import encode_items, recover_shares

TAG_SECRET = 0x30
TAG_PARITY = 0x31


def one_out_sizes(c, d, epsilon, beta, c_m=7.5, c_n=150.0):
    m = math.ceil(c_m * c / epsilon * math.log(1.0 / beta))
    n = math.ceil(c_n * m**2 / epsilon**2 * math.log(m * 2**d / beta))
    return m, n


class OneOutProtocol(ProtocolSpec):
    name = "one-out"

    def __init__(self, c, d, epsilon, beta):
        self.c, self.d, self.epsilon, self.beta = c, d, epsilon, beta

    def referee(self, session):
        m, d, eps = session.m, self.d, self.epsilon
        if self.beta <= 1.0 / max(m, 1):
            raise ValueError("requires beta > 1/m")
        slots = m + 1
        bottom = slots << d
        domain = bottom + 1

        def items(ctx):
            rec = ctx.records
            share_item = (rec["t"].astype(np.int64) << d) | rec["s"].astype(np.int64)
            return np.where(rec["branch"] == 1, bottom, share_item)

        estimate = encode_items(session, items, domain, 1, TAG_HADAMARD, eps)
        shares, complete = recover_shares(estimate, self.beta / 3, slots, d)
        s = int(np.bitwise_xor.reduce(shares))
        query = session.to_curator(2, TAG_SECRET, s=s)

        def curator(ctx):
            rec = ctx.records
            sel = rec["branch"] == 1
            labels = (rec["ips"][sel] >> np.uint64(ctx.query["s"])) & np.uint64(1)
            ctx.charge(eps)
            k = learn_parity_private(rec["x"][sel], labels, self.c, eps, ctx.rng, alpha=0.25, beta=self.beta / 3)
            return {"k": k}

        k = int(session.from_curator(3, curator, TAG_PARITY, query=query)["k"])
        return k if complete else None

    def encode_output(self, result):
        return None if result is None else encode_payload(TAG_PARITY, result)


def one_out_of_2d_parity(instance, epsilon, beta, seed=0, ledger=None, pattern=None):
    """Returns ``(r_hat, transcript, ledger)``; ``r_hat`` is ``None`` when some share was not listed."""
    c, d = instance.params["c"], instance.params["d"]
    if ledger is None:
        ledger = PrivacyLedger(epsilon, instance.n)
    pattern = InteractionPattern.local_then_curator(3) if pattern is None else pattern
    out, transcript = run_protocol(
        OneOutProtocol(c, d, epsilon, beta), instance.curator, instance.agents, pattern, ledger, seed
    )
    return out, transcript, ledger


def score_one_out(instance, output):
    ok = output is not None and int(output) == instance.truth["answer"]
    return ok, 0.0 if ok else 1.0

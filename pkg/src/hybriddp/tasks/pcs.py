"""Parity-chooses-secret: the curator first, then the agents.

Round 1: the curator privately learns r and sends it. Round 2: the referee
forwards r to every agent. Round 3: agents run heavy hitters on (t, s_{r,t})
and the referee outputs the XOR of the recovered shares.
"""

import math

import numpy as np

from ..core import InteractionPattern, PrivacyLedger, ProtocolSpec, run_protocol
from ..core.codec import encode_payload
from ..curator import learn_parity_private
from ..datagen import pcs_share_bit
from ..local import TAG_HADAMARD
from ._shares import encode_items, recover_shares

TAG_PARITY = 0x40
TAG_FORWARD = 0x41
TAG_OUTPUT = 0x42


def pcs_sizes(c, epsilon, beta, c_m=4.0, c_n=25.0):
    """m = c_m (c/eps) ln(1/beta); n solves n = c_n (m/eps)^2 ln(n/eps) by fixed-point iteration."""
    m = math.ceil(c_m * c / epsilon * math.log(1.0 / beta))
    n = float(m * m)
    for _ in range(100):
        nxt = c_n * m**2 / epsilon**2 * math.log(max(n / epsilon, math.e))
        if abs(nxt - n) < 0.5:
            break
        n = nxt
    return m, math.ceil(n)


class PcsProtocol(ProtocolSpec):
    name = "pcs"

    def __init__(self, c, epsilon, beta):
        self.c, self.epsilon, self.beta = c, epsilon, beta

    def referee(self, session):
        m, eps = session.m, self.epsilon
        if self.beta <= 1.0 / max(m, 1):
            raise ValueError("requires beta > 1/m")
        session.shared_seed()

        def curator(ctx):
            ctx.charge(eps)
            rec = ctx.records
            r = learn_parity_private(rec["x"], rec["label"], self.c, eps, ctx.rng, alpha=0.25, beta=self.beta / 3)
            return {"r": r}

        r = int(session.from_curator(1, curator, TAG_PARITY)["r"])
        forward = session.to_agents(2, session.all_agents(), TAG_FORWARD, r=[r])

        def items(ctx):
            rec = ctx.records
            chosen = int(ctx.query["r"][0])
            return 2 * rec["t"].astype(np.int64) + pcs_share_bit(rec["shares"], chosen).astype(np.int64)

        estimate = encode_items(session, items, 2 * (m + 1), 3, TAG_HADAMARD, eps, query=forward)
        shares, complete = recover_shares(estimate, self.beta / 3, m + 1, 1)
        return int(np.bitwise_xor.reduce(shares)) if complete else None

    def encode_output(self, result):
        return None if result is None else encode_payload(TAG_OUTPUT, result)


def parity_chooses_secret(instance, epsilon, beta, seed=0, ledger=None, pattern=None):
    c = instance.params["c"]
    if ledger is None:
        ledger = PrivacyLedger(epsilon, instance.n)
    pattern = InteractionPattern.curator_then_local(3) if pattern is None else pattern
    out, transcript = run_protocol(PcsProtocol(c, epsilon, beta), instance.curator, instance.agents, pattern, ledger, seed)
    return out, transcript, ledger


def score_pcs(instance, output):
    ok = output is not None and int(output) == instance.truth["answer"]
    return ok, 0.0 if ok else 1.0

"""Learner for the concatenated class c_{k,t}(x, y) = (Par_k(x), Thr_t(y)).

The curator learns the parity half. Half of the agents locate the quantiles
alpha/4, 2alpha/4, ... of the y's by parallel binary searches; the other half
report (bin, threshold label) through the frequency oracle, and the referee
puts the threshold at the start of the longest suffix of bins whose labels
are mostly 1.
"""

import math
from dataclasses import dataclass

import numpy as np

from ..core import InteractionPattern, PrivacyLedger, ProtocolSpec, run_protocol
from ..core.codec import encode_payload
from ..curator import learn_parity_private, parity_sample_size
from ..datagen import marginal_probs
from ..local import (
    TAG_HADAMARD,
    TAG_QUANTILE_QUERY,
    TAG_QUANTILE_REPLY,
    QuantileQuery,
    QuantileSearch,
    hadamard_aggregate,
    hadamard_encode,
    hadamard_rows,
    hadamard_size,
    hh_deviation,
    quantile_sample_size,
    randomized_response,
)

TAG_BOUNDARIES = 0x50
TAG_PARITY = 0x51


@dataclass
class ConcatHypothesis:
    k: int
    t_hat: int

    def predict(self, x, y):
        from ..curator import parity

        return parity(self.k, x), (np.asarray(y) >= self.t_hat).astype(np.uint8)


def quantile_levels(alpha):
    count = math.ceil(4.0 / alpha - 1e-12) - 1
    return [(i + 1) * alpha / 4.0 for i in range(count)]


def concat_query(b, p_star, alpha, beta):
    return QuantileQuery(p_star, 0.0, float(1 << b), 0.25, lambda_quant=alpha / 10, beta_conf=beta * alpha / 16)


def concat_sizes(b, c, alpha, beta, epsilon, c_m=1.0, c_q=0.0035, c_h=1.0):
    """(m, n). n is split in half: quantile searches on one side, the label histogram on the other."""
    m = parity_sample_size(c, alpha / 2, beta / 2, epsilon, c_m)
    levels = quantile_levels(alpha)
    per_search = quantile_sample_size(concat_query(b, levels[0], alpha, beta), epsilon, c_q)
    bins = len(levels) + 1
    scale = (math.exp(epsilon) + 1) / (math.exp(epsilon) - 1)
    hist = math.ceil(c_h * (4 / alpha) ** 2 * scale**2 * 2 * math.log(4 * bins / beta))
    half = max(per_search * len(levels), hist)
    return m, 2 * half


def threshold_from_bins(c0, c1, boundaries, top, deviation):
    """Start of the longest suffix of bins in which 1-labels are the majority.

    Bins whose estimated population is below ``deviation`` carry no evidence
    and never break the suffix.
    """
    total = c0 + c1
    evidence = total > deviation
    mostly_one = c1 >= c0
    bad = np.flatnonzero(evidence & ~mostly_one)
    start = int(bad[-1]) + 1 if len(bad) else 0
    lower = [0] + [int(math.ceil(v)) for v in boundaries] + [top]
    return min(max(lower[start], 0), top)


class ConcatProtocol(ProtocolSpec):
    name = "concat"

    def __init__(self, b, c, epsilon, alpha, beta):
        self.b, self.c = b, c
        self.epsilon, self.alpha, self.beta = epsilon, alpha, beta
        self.levels = quantile_levels(alpha)
        self.rounds = concat_query(b, self.levels[0], alpha, beta).rounds

    @property
    def pattern(self):
        return InteractionPattern.local_then_curator(2 * self.rounds + 3)

    def referee(self, session):
        eps, b = self.epsilon, self.b
        groups = len(self.levels)
        half = session.n // 2
        if half < groups * self.rounds:
            raise ValueError(f"{session.n} agents cannot cover {groups} searches of {self.rounds} rounds")
        seed = session.shared_seed()
        # agents [0, half) search; group g, step r is a contiguous slice
        search_agents = np.arange(half, dtype=np.int64)
        per_group = np.array_split(search_agents, groups)
        steps = [np.array_split(g, self.rounds) for g in per_group]
        searches = [QuantileSearch(concat_query(b, p, self.alpha, self.beta), eps) for p in self.levels]

        for r in range(self.rounds):
            idx = np.concatenate([steps[g][r] for g in range(groups)])
            mids = np.concatenate([np.full(len(steps[g][r]), searches[g].midpoint) for g in range(groups)])
            query = session.to_agents(2 * r + 1, idx, TAG_QUANTILE_QUERY, mid=mids.view(np.int64))

            def answer(ctx):
                mid = np.asarray(ctx.query["mid"]).view(np.float64)
                below = (ctx.records["y"].astype(np.float64) <= mid).astype(np.int64)
                return {"bit": randomized_response(below, eps, ctx.rng)}

            reply = session.from_agents(2 * r + 2, idx, answer, TAG_QUANTILE_REPLY, eps, query=query)
            offset = 0
            for g in range(groups):
                size = len(steps[g][r])
                searches[g].update(reply["bit"][offset : offset + size])
                offset += size

        boundaries = np.sort([s.estimate for s in searches])
        hist_agents = np.arange(half, session.n, dtype=np.int64)
        bins = groups + 1
        domain = 2 * bins
        rows = hadamard_rows(seed, len(hist_agents), hadamard_size(domain))
        fields = {f"q{i}": [np.float64(v).view(np.int64)] for i, v in enumerate(boundaries)}
        hist_round = 2 * self.rounds + 1
        query = session.to_agents(hist_round, hist_agents, TAG_BOUNDARIES, **fields)

        def report(ctx):
            bounds = np.array([np.asarray(ctx.query[f"q{i}"]).view(np.float64)[0] for i in range(groups)])
            y = ctx.records["y"].astype(np.float64)
            bin_index = np.searchsorted(bounds, y, side="right")
            items = 2 * bin_index + ctx.records["thr"].astype(np.int64)
            return {"bit": hadamard_encode(items, rows[ctx.indices - half], eps, ctx.rng)}

        reply = session.from_agents(hist_round + 1, hist_agents, report, TAG_HADAMARD, eps, query=query)
        est = hadamard_aggregate(rows, reply["bit"], eps, domain)
        counts = est.counts.reshape(bins, 2)
        deviation = hh_deviation(len(hist_agents), domain, eps, self.beta / 4)
        t_hat = threshold_from_bins(counts[:, 0], counts[:, 1], boundaries, 1 << b, deviation)

        def curator(ctx):
            ctx.charge(eps)
            rec = ctx.records
            return {"k": learn_parity_private(rec["x"], rec["par"], self.c, eps, ctx.rng)}

        k = int(session.from_curator(hist_round + 2, curator, TAG_PARITY)["k"])
        return ConcatHypothesis(k=k, t_hat=t_hat)

    def encode_output(self, result):
        return encode_payload(TAG_PARITY, result.k, result.t_hat)


def concat_learn(instance, epsilon, alpha, beta, seed=0, ledger=None):
    b, c = instance.params["b"], instance.params["c"]
    if ledger is None:
        ledger = PrivacyLedger(epsilon, instance.n)
    spec = ConcatProtocol(b, c, epsilon, alpha, beta)
    out, transcript = run_protocol(spec, instance.curator, instance.agents, spec.pattern, ledger, seed)
    return out, transcript, ledger


def concat_error(hyp, k_star, t_star, probs):
    """Pr[(Par_k(x), Thr_t_hat(y)) != (Par_k*(x), Thr_t*(y))] for uniform x and y ~ probs."""
    parity_err = 0.0 if hyp.k == k_star else 0.5
    lo, hi = sorted((hyp.t_hat, t_star))
    thr_err = float(np.sum(probs[lo:hi]))
    return 1.0 - (1.0 - parity_err) * (1.0 - thr_err)


def score_concat(instance, hyp, tolerance=0.25):
    probs = marginal_probs(instance.params["b"], instance.params.get("marginal", "uniform"))
    err = concat_error(hyp, instance.truth["k_star"], instance.truth["t_star"], probs)
    return err <= tolerance, err

"""Select-then-estimate: the curator picks a near-maximal coordinate, the
agents estimate its mean with randomized response."""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ..core import InteractionPattern, PrivacyLedger, ProtocolSpec, run_protocol
from ..core.codec import encode_payload
from ..curator import laplace_mean, select_max_coordinate
from ..local import TAG_RR, estimate_bernoulli_mean, randomized_response

TAG_INDEX = 0x60
TAG_FORWARD = 0x61


@dataclass
class SelectEstimateResult:
    i: int
    mu_hat: float
    outside_regime: bool = False


class SelectEstimateProtocol(ProtocolSpec):
    name = "select-estimate"

    def __init__(self, epsilon, alpha, alpha_prime):
        self.epsilon, self.alpha, self.alpha_prime = epsilon, alpha, alpha_prime

    def referee(self, session):
        eps = self.epsilon
        session.shared_seed()

        def curator(ctx):
            return {"i": select_max_coordinate(ctx.records["v"], eps, ctx.rng, ledger=_Charger(ctx.charge))}

        i = int(session.from_curator(1, curator, TAG_INDEX)["i"])
        forward = session.to_agents(2, session.all_agents(), TAG_FORWARD, i=[i])

        def agents(ctx):
            j = int(ctx.query["i"][0])
            bits = (ctx.records["v"][:, j].astype(np.int64) + 1) // 2
            return {"bit": randomized_response(bits, eps, ctx.rng)}

        reply = session.from_agents(3, session.all_agents(), agents, TAG_RR, eps, query=forward)
        mu_hat = 2.0 * estimate_bernoulli_mean(reply["bit"], eps) - 1.0
        return SelectEstimateResult(i, mu_hat, self.alpha_prime >= self.alpha)

    def encode_output(self, result):
        return encode_payload(TAG_INDEX, result.i, result.mu_hat)


class _Charger:
    """Adapts a curator context's charge callback to the ledger interface of the mechanisms."""

    def __init__(self, charge):
        self._charge = charge

    def charge(self, party, epsilon, partition_tag=None):
        self._charge(epsilon, partition_tag)


def select_then_estimate(instance, epsilon, alpha, alpha_prime, seed=0, ledger=None):
    if alpha_prime >= alpha:
        warnings.warn("alpha' >= alpha is outside the regime where the hybrid protocol helps", stacklevel=2)
    if ledger is None:
        ledger = PrivacyLedger(epsilon, instance.n)
    spec = SelectEstimateProtocol(epsilon, alpha, alpha_prime)
    out, transcript = run_protocol(
        spec, instance.curator, instance.agents, InteractionPattern.curator_then_local(3), ledger, seed
    )
    return out, transcript, ledger


def curator_only_select_estimate(sample, epsilon, rng, ledger=None):
    """Baseline without agents: a Laplace mean per coordinate at eps/d each, then the noisy argmax."""
    sample = np.asarray(sample, dtype=np.float64)
    d = sample.shape[1]
    means = np.array([laplace_mean(sample[:, j], epsilon / d, rng, lo=-1.0, hi=1.0, ledger=ledger) for j in range(d)])
    i = int(np.argmax(means))
    return SelectEstimateResult(i, float(means[i]))


def score_select(instance, result, alpha, alpha_prime):
    mu = np.asarray(instance.truth["mu"])
    selected = mu[result.i] >= mu.max() - alpha
    estimated = abs(result.mu_hat - mu[result.i]) <= alpha_prime
    return bool(selected and estimated), abs(result.mu_hat - mu[result.i])


def select_conditions(mu, result, alpha, alpha_prime):
    mu = np.asarray(mu)
    return bool(mu[result.i] >= mu.max() - alpha), bool(abs(result.mu_hat - mu[result.i]) <= alpha_prime)


def select_sizes(d, alpha, alpha_prime, epsilon, beta=0.1, c_m=1.0, c_n=1.0):
    """m ~ ln(d/beta) / (alpha eps) for selection, n ~ ln(2/beta) / (alpha' eps)^2 for estimation."""
    m = math.ceil(c_m * 4 * math.log(d / beta) / (alpha * epsilon)) if d > 1 else 1
    scale = (math.exp(epsilon) + 1) / (math.exp(epsilon) - 1)
    n = math.ceil(c_n * 2 * scale**2 * math.log(2 / beta) / alpha_prime**2)
    return m, n

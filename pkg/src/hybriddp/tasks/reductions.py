"""Constructive reductions: turning a hybrid hypothesis test into a one-sided
protocol, and private learning of a finite class via a selection solver."""

import math
from dataclasses import dataclass

import numpy as np

from ..core import InteractionPattern, PrivacyLedger, ProtocolSpec, run_protocol
from ..core.codec import encode_payload
from ..curator import laplace_mean, parity, select_max_coordinate
from ..datagen import sample_hypo
from ..local import TAG_RR, estimate_bernoulli_mean, randomized_response, rr_scale

TAG_MEAN = 0x70
TAG_DECISION = 0x71


def _rr_round(session, epsilon, round=1):
    def agents(ctx):
        return {"bit": randomized_response(ctx.records["bit"].astype(np.int64), epsilon, ctx.rng)}

    return session.from_agents(round, session.all_agents(), agents, TAG_RR, epsilon)["bit"]


class MajorityTestProtocol(ProtocolSpec):
    """Local-only test: agents answer with randomized response, the referee thresholds the debiased mean at 1/2."""

    name = "majority-test"

    def __init__(self, epsilon):
        self.epsilon = epsilon

    def referee(self, session):
        coin = int(session.referee_rng(0).integers(0, 2))
        if session.n == 0:
            return coin
        est = estimate_bernoulli_mean(_rr_round(session, self.epsilon), self.epsilon)
        if est == 0.5:
            return coin
        return int(est > 0.5)

    def encode_output(self, result):
        return encode_payload(TAG_DECISION, result)


def hypothesis_test_majority(bits, epsilon, seed=0, ledger=None):
    """Decide between D_0 and D_1 from agent bits alone; returns ``(decision, transcript)``."""
    rec = np.zeros(len(bits), dtype=[("bit", "u1")])
    rec["bit"] = np.asarray(bits, dtype=np.uint8)
    if ledger is None:
        ledger = PrivacyLedger(epsilon, len(rec))
    return run_protocol(MajorityTestProtocol(epsilon), None, rec, InteractionPattern.non_interactive(), ledger, seed)


class HybridTestProtocol(ProtocolSpec):
    """Non-interactive hybrid test: the curator's Laplace mean and the agents' debiased
    randomized-response mean are combined with inverse-variance weights."""

    name = "hybrid-test"

    def __init__(self, epsilon):
        self.epsilon = epsilon

    def weights(self, m, n):
        eps = self.epsilon
        w_curator = 0.0
        if m:
            noise = 0.0 if math.isinf(eps) else 2.0 / (m * eps) ** 2
            w_curator = 1.0 / (0.25 / m + noise)
        w_local = 4.0 * n / rr_scale(eps) ** 2 if n else 0.0
        return w_curator, w_local

    def referee(self, session):
        eps = self.epsilon
        coin = int(session.referee_rng(0).integers(0, 2))
        w_curator, w_local = self.weights(session.m, session.n)
        z = 0.0
        if session.n:
            z += w_local * (estimate_bernoulli_mean(_rr_round(session, eps), eps) - 0.5)
        if session.m:

            def curator(ctx):
                ctx.charge(eps)
                return {"mean": laplace_mean(ctx.records["bit"], eps, ctx.rng)}

            z += w_curator * (session.from_curator(1, curator, TAG_MEAN)["mean"] - 0.5)
        if z == 0:
            return coin
        return int(z > 0)

    def encode_output(self, result):
        return encode_payload(TAG_DECISION, result)


class LocalFromHybrid(ProtocolSpec):
    """Local-model protocol built from a hybrid test.

    With probability gamma/2 it outputs 1 without any messages; otherwise the
    referee draws m samples from D_0, plays the curator itself, and runs the
    hybrid protocol with the real agents.
    """

    name = "local-from-hybrid"

    def __init__(self, hybrid, sampler_d0, gamma, m):
        self.hybrid, self.sampler, self.gamma, self.m = hybrid, sampler_d0, gamma, m

    def referee(self, session):
        rng = session.referee_rng(0, salt=0x72)
        if rng.random() < self.gamma / 2:
            return 1
        records = self.sampler(self.m, rng)
        with session.simulating_curator(records, rng):
            return self.hybrid.referee(session)

    def encode_output(self, result):
        return encode_payload(TAG_DECISION, result)


class CuratorFromHybrid(ProtocolSpec):
    """Curator-model counterpart: with probability gamma/2 output 0, otherwise simulate the agents from D_1."""

    name = "curator-from-hybrid"

    def __init__(self, hybrid, sampler_d1, gamma, n):
        self.hybrid, self.sampler, self.gamma, self.n = hybrid, sampler_d1, gamma, n

    def referee(self, session):
        rng = session.referee_rng(0, salt=0x73)
        if rng.random() < self.gamma / 2:
            return 0
        records = self.sampler(self.n, rng)
        with session.simulating_agents(records, rng):
            return self.hybrid.referee(session)

    def encode_output(self, result):
        return encode_payload(TAG_DECISION, result)


def build_local_from_hybrid(hybrid, sampler_d0, gamma, m):
    return LocalFromHybrid(hybrid, sampler_d0, gamma, m)


def build_curator_from_hybrid(hybrid, sampler_d1, gamma, n):
    return CuratorFromHybrid(hybrid, sampler_d1, gamma, n)


@dataclass
class HybridProfile:
    """Empirical behavior of a hybrid test: its advantage gamma and the crossover probability p."""

    gamma: float
    p: float
    success: tuple

    @property
    def branch(self):
        return "local" if self.p >= 0.5 else "curator"


def profile_hybrid(hybrid, alpha, m, n, trials, seed=0):
    """Estimate success per true distribution and p = Pr[output 1 | curator ~ D_0, agents ~ D_1]."""
    rng = np.random.default_rng(seed)
    wins = [0, 0]
    crossed = 0
    pattern = InteractionPattern.non_interactive()
    for trial in range(trials):
        for j in (0, 1):
            out, _ = run_protocol(
                hybrid, sample_hypo(alpha, j, m, rng), sample_hypo(alpha, j, n, rng), pattern, None, rng.integers(2**63)
            )
            wins[j] += out == j
        out, _ = run_protocol(
            hybrid, sample_hypo(alpha, 0, m, rng), sample_hypo(alpha, 1, n, rng), pattern, None, rng.integers(2**63)
        )
        crossed += out == 1
    success = (wins[0] / trials, wins[1] / trials)
    return HybridProfile(gamma=min(success) - 0.5, p=crossed / trials, success=success)


def reduce_hybrid_test(hybrid, alpha, m, n, profile):
    """Pick the one-sided construction dictated by the crossover probability."""
    gamma = max(profile.gamma, 0.0)
    if profile.p >= 0.5:
        return build_local_from_hybrid(hybrid, lambda k, rng: sample_hypo(alpha, 0, k, rng), gamma, m)
    return build_curator_from_hybrid(hybrid, lambda k, rng: sample_hypo(alpha, 1, k, rng), gamma, n)


# -- learning a finite class through selection --------------------------------


class ParityClass:
    """All 2^c parities on {0,1}^c, indexed by their packed vector."""

    def __init__(self, c):
        if c > 12:
            raise ValueError("class enumeration too large")
        self.c = c

    def __len__(self):
        return 1 << self.c

    def __getitem__(self, j):
        return j

    def evaluate(self, xs):
        xs = np.asarray(xs, dtype=np.int64)
        ks = np.arange(len(self), dtype=np.int64)
        return parity(np.repeat(ks[None, :], len(xs), axis=0).ravel(), np.repeat(xs, len(ks))).reshape(len(xs), len(ks))


class FunctionClass:
    def __init__(self, functions):
        self.functions = list(functions)

    def __len__(self):
        return len(self.functions)

    def __getitem__(self, j):
        return self.functions[j]

    def evaluate(self, xs):
        return np.stack([np.asarray([f(x) for x in xs]) for f in self.functions], axis=1)


MAX_CONVERT_CELLS = 1 << 26


def convert(concepts, xs, labels):
    """Row i, column j is 1 iff concept j agrees with example i."""
    if len(xs) * len(concepts) > MAX_CONVERT_CELLS:
        raise ValueError("class enumeration too large")
    preds = concepts.evaluate(xs)
    return (preds == np.asarray(labels)[:, None]).astype(np.uint8)


def reduce_learning_to_selection(selection_solver, concepts, xs, labels):
    """Learn a member of ``concepts`` by handing the converted sample to ``selection_solver``.

    The solver sees one converted row per example, so it runs with the same
    parties and messages as on a native selection instance.
    """
    index = int(selection_solver(convert(concepts, xs, labels)))
    return index, concepts[index]


def exact_selection(rows):
    """Non-private oracle: the lowest-index coordinate with the largest mean."""
    return int(np.argmax(np.asarray(rows).mean(axis=0)))


def private_selection(epsilon, rng):
    """``select_max_coordinate`` on {0,1} rows mapped to {-1,1}."""

    def solver(rows):
        return select_max_coordinate(2.0 * np.asarray(rows, dtype=np.float64) - 1.0, epsilon, rng)

    return solver


def learning_sample_size(vc, alpha):
    return math.ceil(64 / alpha * (vc * math.log(128 / alpha) + math.log(8)))

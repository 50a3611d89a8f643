"""Privacy verification.

Exact epsilon for single-shot randomizers on enumerable domains, a
Clopper-Pearson lower bound on epsilon from sampled views, and per-party
ledger tables.
"""

import csv
import io
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np
from scipy.stats import beta as beta_dist

from . import kernels
from .core.codec import decode_payload, unpack_int
from .core.engine import TAG_SHARED_SEED, run_protocol
from .core.parties import PartyKind
from .local import hadamard_rows, hadamard_size, keep_probability

TOLERANCE = 1e-9


def channel_epsilon(matrix):
    """max over outputs and input pairs of ln(P[out | x] / P[out | x']) for a row-stochastic matrix.

    An output that is possible under one input and impossible under another
    gives ``inf``.
    """
    p = np.asarray(matrix, dtype=np.float64)
    hi = p.max(axis=0)
    lo = p.min(axis=0)
    reachable = hi > 0
    if np.any(reachable & (lo == 0)):
        return math.inf
    if not reachable.any():
        return 0.0
    return float(np.max(np.log(hi[reachable]) - np.log(lo[reachable])))


def exact_channel_epsilon(randomizer, input_domain, output_domain):
    """``randomizer(x)`` returns the probabilities of ``output_domain`` (in order) given input x."""
    rows = [np.asarray(randomizer(x), dtype=np.float64) for x in input_domain]
    for row in rows:
        if row.shape != (len(output_domain),):
            raise ValueError("randomizer must return one probability per output")
        if abs(row.sum() - 1.0) > 1e-9:
            raise ValueError("output probabilities must sum to 1")
    return channel_epsilon(np.stack(rows))


def rr_channel(epsilon):
    keep = keep_probability(epsilon)

    def channel(bit):
        return [keep, 1.0 - keep] if bit == 0 else [1.0 - keep, keep]

    return channel, [0, 1], [0, 1]


def hadamard_channel(epsilon, domain_size):
    """Exact law of the frequency-oracle encoder: a public uniform row j, then a randomized bit.

    Outputs are pairs (j, bit) flattened to 2j + bit. Probabilities come from
    the same parity kernel the encoder uses.
    """
    size = hadamard_size(domain_size)
    keep = keep_probability(epsilon)
    rows = np.arange(size, dtype=np.uint64)

    def channel(item):
        true_bit = kernels.parity_and(rows, np.full(size, item, dtype=np.uint64)).astype(np.int64)
        probs = np.empty(2 * size)
        probs[0::2] = np.where(true_bit == 0, keep, 1.0 - keep) / size
        probs[1::2] = np.where(true_bit == 1, keep, 1.0 - keep) / size
        return probs

    return channel, list(range(domain_size)), list(range(2 * size))


@dataclass
class ChannelAudit:
    component: str
    input_domain: list
    output_domain: list
    measured: float
    claimed: float

    @property
    def passed(self):
        return self.measured <= self.claimed + TOLERANCE


def audit_channel(component, built, claimed):
    channel, inputs, outputs = built
    return ChannelAudit(component, inputs, outputs, exact_channel_epsilon(channel, inputs, outputs), claimed)


def standard_audits(epsilons=(0.5, 1.0, 2.0), domain_size=8):
    audits = []
    for eps in epsilons:
        audits.append(audit_channel("randomized_response", rr_channel(eps), eps))
        audits.append(audit_channel(f"freq_oracle_encoder[{domain_size}]", hadamard_channel(eps, domain_size), eps))
    return audits


def audit_csv(audits):
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["component", "claimed_eps", "measured_eps", "pass"])
    for a in audits:
        writer.writerow([a.component, repr(float(a.claimed)), repr(float(a.measured)), "true" if a.passed else "false"])
    return out.getvalue()


# -- sampled views ---------------------------------------------------------------


def clopper_pearson(successes, trials, alpha):
    """Two-sided (1 - alpha) interval for a binomial proportion."""
    lo = 0.0 if successes == 0 else float(beta_dist.ppf(alpha / 2, successes, trials - successes + 1))
    hi = 1.0 if successes == trials else float(beta_dist.ppf(1 - alpha / 2, successes + 1, trials - successes))
    return lo, hi


@dataclass
class EpsilonBound:
    lower_bound: float
    point_estimate: float
    event: object
    events_tested: int

    @property
    def ci_width(self):
        return max(0.0, self.point_estimate - self.lower_bound)


def mc_epsilon_lower_bound(sample_a, sample_b, trials, events=None, confidence=0.95, seed=0):
    """Statistical lower bound on epsilon from views on two neighboring inputs.

    ``sample_x(rng, count)`` returns ``count`` hashable views. Each event is a
    set of views; by default every observed view is its own event. For each
    event and both directions the bound uses the lower Clopper-Pearson limit
    of one side over the upper limit of the other, with a Bonferroni split of
    ``1 - confidence`` over all tests, so it holds simultaneously.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    rng = np.random.default_rng(seed)
    views_a = Counter(_hashable(v) for v in sample_a(rng, trials))
    views_b = Counter(_hashable(v) for v in sample_b(rng, trials))
    if events is None:
        events = [frozenset([v]) for v in sorted(set(views_a) | set(views_b), key=repr)]
    else:
        events = [frozenset(_hashable(v) for v in e) for e in events]
    tests = max(1, 2 * len(events))
    alpha = (1 - confidence) / tests
    best = EpsilonBound(0.0, 0.0, None, len(events))
    for event in events:
        ka = sum(views_a[v] for v in event)
        kb = sum(views_b[v] for v in event)
        lo_a, hi_a = clopper_pearson(ka, trials, 2 * alpha)
        lo_b, hi_b = clopper_pearson(kb, trials, 2 * alpha)
        for k_num, lo_num, k_den, hi_den in ((ka, lo_a, kb, hi_b), (kb, lo_b, ka, hi_a)):
            bound = math.log(lo_num / hi_den) if lo_num > 0 else -math.inf
            point = math.log(k_num / k_den) if k_num and k_den else (math.inf if k_num else 0.0)
            if bound > best.lower_bound:
                best = EpsilonBound(bound, point, event, len(events))
    return best


def _hashable(view):
    if isinstance(view, np.ndarray):
        return view.tobytes()
    if isinstance(view, list):
        return tuple(_hashable(v) for v in view)
    return view


def party_view(party):
    """Everything ``party`` sent and received, plus the referee's output."""

    def view(transcript):
        return (tuple(transcript.received_by(party)), tuple(transcript.sent_by(party)), transcript.output)

    return view


def frequency_oracle_view(party, domain_size):
    """An agent's view in a one-round frequency-oracle protocol, reduced to what matters.

    The broadcast seed is replaced by the Hadamard row it assigns to the
    agent, so views from different runs can be pooled into events.
    """
    size = hadamard_size(domain_size)

    def view(transcript):
        seed = None
        for payload in transcript.received_by(party):
            tag, fields = decode_payload(payload)
            if tag == TAG_SHARED_SEED:
                seed = int(np.int64(unpack_int(fields[0])).view(np.uint64))
        row = None if seed is None else int(hadamard_rows(seed, party.index + 1, size)[party.index])
        return (row, tuple(transcript.sent_by(party)), transcript.output)

    return view


def protocol_view_sampler(spec, curator, agents, pattern, view):
    """Sampler of ``view(transcript)`` over fresh protocol seeds, for ``mc_epsilon_lower_bound``."""

    def sample(rng, count):
        return [
            view(run_protocol(spec, curator, agents, pattern, None, int(rng.integers(2**63)))[1])
            for _ in range(count)
        ]

    return sample


# -- ledger tables ---------------------------------------------------------------


@dataclass(frozen=True)
class LedgerRow:
    party: str
    round: int
    epsilon: float
    partition_tag: object
    count: int
    party_total: float
    over_budget: bool


def ledger_report(transcript, ledger):
    """One row per recorded charge, with the charging party's running total and an over-budget flag.

    Rows for agent groups carry the largest total among the group's agents.
    """
    rows = []
    agent_totals = ledger.agent_totals
    worst_agent = float(agent_totals.max()) if len(agent_totals) else 0.0
    totals = {str(p): ledger.total(p) for p in ledger.parties()}
    for entry in ledger.entries:
        total = worst_agent if entry.party.startswith("agents[") else totals.get(entry.party, 0.0)
        rows.append(
            LedgerRow(
                entry.party,
                entry.round,
                entry.epsilon,
                entry.tag,
                entry.count,
                total,
                total > ledger.budget + TOLERANCE,
            )
        )
    return rows


def message_tally(transcript):
    """Messages per party kind, split by direction."""
    tally = Counter()
    for entry in transcript.entries:
        if hasattr(entry, "upstream"):
            tally[("agent", "sent" if entry.upstream else "received")] += len(entry)
        else:
            for end, who in (("sent", entry.sender), ("received", entry.receiver)):
                if who.kind != PartyKind.REFEREE:
                    tally[(str(who), end)] += 1
    return dict(tally)

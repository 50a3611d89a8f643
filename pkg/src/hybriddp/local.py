"""Local-model primitives.

Each primitive is split into the agent-side randomizer (what a single agent
computes and sends) and the referee-side aggregator, so protocols can run the
halves on opposite sides of the engine. The one-call helpers
(``freq_oracle``, ``heavy_hitters``, ``cdf_release``, ``private_quantile``)
compose both halves for standalone use.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from . import kernels
from .core.rng import derive_seed

MAX_DOMAIN = 1 << 20

# payload tags for agent messages
TAG_RR = 1
TAG_HADAMARD = 2
TAG_TREE = 3
TAG_QUANTILE_QUERY = 4
TAG_QUANTILE_REPLY = 5


class DomainTooLarge(ValueError):
    pass


class InsufficientAgents(ValueError):
    pass


def keep_probability(epsilon):
    """Probability that randomized response reports the true bit: e^eps / (1 + e^eps)."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    return float(expit(epsilon))


def rr_scale(epsilon):
    """Debiasing factor (e^eps + 1) / (e^eps - 1) = 1 / (2p - 1)."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if math.isinf(epsilon):
        return 1.0
    return 1.0 / math.tanh(epsilon / 2.0)


def randomized_response(bits, epsilon, rng):
    """Randomized response on one bit or an array of bits."""
    keep = keep_probability(epsilon)
    arr = np.asarray(bits, dtype=np.int64)
    flip = rng.random(arr.shape) >= keep
    out = arr ^ flip
    if out.ndim == 0:
        return int(out)
    return out


def estimate_bernoulli_mean(noisy_bits, epsilon):
    """Unbiased (before clamping) estimate of the mean of the bits behind ``noisy_bits``; clamped to [0, 1]."""
    noisy = np.asarray(noisy_bits, dtype=np.float64)
    if noisy.size == 0:
        raise ValueError("no reports")
    keep = keep_probability(epsilon)
    est = (noisy.mean() - (1.0 - keep)) / (2.0 * keep - 1.0)
    return float(min(1.0, max(0.0, est)))


@dataclass
class FrequencyEstimate:
    """Debiased per-item counts. Entries may be negative; nothing is clamped."""

    counts: np.ndarray
    n: int
    epsilon: float

    @property
    def domain_size(self):
        return len(self.counts)

    def __getitem__(self, item):
        return self.counts[item]

    def deviation(self, beta):
        """Half-width that bounds every item's error simultaneously with probability >= 1 - beta.

        Each report contributes a term bounded by ``rr_scale(eps)`` in absolute
        value, so Hoeffding plus a union bound over the domain gives
        ``scale * sqrt(2 n ln(2 |X| / beta))``.
        """
        return hh_deviation(self.n, self.domain_size, self.epsilon, beta)


def hh_deviation(n, domain_size, epsilon, beta):
    if n == 0:
        return 0.0
    return rr_scale(epsilon) * math.sqrt(2.0 * n * math.log(2.0 * domain_size / beta))


def hadamard_size(domain_size):
    if domain_size < 1:
        raise ValueError("domain must be nonempty")
    if domain_size > MAX_DOMAIN:
        raise DomainTooLarge(f"domain of size {domain_size} exceeds {MAX_DOMAIN}")
    return 1 << max(0, (domain_size - 1).bit_length())


def hadamard_rows(shared_seed, n, size):
    """Public row assignment: agent i uses row perm[i mod size] of a shared random permutation.

    Every agent's row is marginally uniform, and rows are balanced across agents.
    """
    perm = np.random.default_rng(shared_seed).permutation(size).astype(np.uint64)
    return perm[np.arange(n) % size]


def hadamard_encode(items, rows, epsilon, rng):
    """Agent randomizer: randomized response on the sign of H[row, item]; returns bits in {0, 1}."""
    items = np.asarray(items, dtype=np.uint64)
    uniforms = rng.random(len(items))
    return kernels.hadamard_encode(items, rows, uniforms, keep_probability(epsilon))


def hadamard_aggregate(rows, bits, epsilon, domain_size):
    size = hadamard_size(domain_size)
    sums = kernels.signed_row_sums(rows, bits, size) * rr_scale(epsilon)
    counts = kernels.fwht(sums)[:domain_size]
    return FrequencyEstimate(counts=counts, n=len(bits), epsilon=float(epsilon))


def _private_rng(rng, shared_seed):
    # standalone helpers only; inside protocols the engine hands out private streams
    if rng is not None:
        return rng
    return np.random.default_rng(derive_seed(shared_seed, 0xC0115))


def freq_oracle(agent_items, epsilon, shared_seed, *, domain_size=None, rng=None):
    items = np.asarray(agent_items, dtype=np.int64)
    if domain_size is None:
        domain_size = int(items.max()) + 1 if len(items) else 1
    if len(items) and (items.min() < 0 or items.max() >= domain_size):
        raise ValueError("item outside the domain")
    size = hadamard_size(domain_size)
    rows = hadamard_rows(shared_seed, len(items), size)
    bits = hadamard_encode(items, rows, epsilon, _private_rng(rng, shared_seed))
    return hadamard_aggregate(rows, bits, epsilon, domain_size)


@dataclass
class HeavyHittersList:
    items: dict
    promote: float
    demote: float
    estimate: FrequencyEstimate = field(repr=False)

    def __contains__(self, item):
        return item in self.items

    def __iter__(self):
        return iter(sorted(self.items))

    def __len__(self):
        return len(self.items)


def heavy_hitters_from_estimate(estimate, beta):
    """List every item whose estimate clears the simultaneous deviation bound.

    With probability >= 1 - beta: items held by at least ``promote`` agents are
    listed, and every listed item is held by at least one agent.
    """
    dev = estimate.deviation(beta)
    listed = np.flatnonzero(estimate.counts > dev)
    items = {int(i): float(estimate.counts[i]) for i in listed}
    return HeavyHittersList(items=items, promote=2.0 * dev, demote=dev, estimate=estimate)


def heavy_hitters(agent_items, epsilon, beta, shared_seed, *, domain_size=None, rng=None):
    est = freq_oracle(agent_items, epsilon, shared_seed, domain_size=domain_size, rng=rng)
    return heavy_hitters_from_estimate(est, beta)


# -- threshold (CDF) release over a prefix tree ------------------------------


@dataclass
class CdfEstimate:
    """Estimated CDF on {0, ..., 2**b - 1}, assembled from per-level prefix frequencies.

    ``fractions[j - 1][p]`` estimates the fraction of values whose top ``j``
    bits equal ``p``.
    """

    b: int
    fractions: list
    epsilon: float
    alpha: float | None = None
    n: int = 0

    def __call__(self, w):
        w = np.asarray(w, dtype=np.int64)
        scalar = w.ndim == 0
        w = np.atleast_1d(w)
        v = w + 1
        top = 1 << self.b
        inside = (v > 0) & (v < top)
        vv = np.where(inside, v, 0)
        out = np.zeros(len(w), dtype=np.float64)
        for j in range(1, self.b + 1):
            shifted = vv >> (self.b - j)
            hit = inside & ((shifted & 1) == 1)
            idx = np.where(hit, shifted - 1, 0)
            out += np.where(hit, self.fractions[j - 1][idx], 0.0)
        out = np.clip(out, 0.0, 1.0)
        out[v >= top] = 1.0
        out[v <= 0] = 0.0
        return float(out[0]) if scalar else out

    def padded(self, w, pad_bits):
        """CDF at points carrying ``pad_bits`` uniform low-order bits.

        Mass of each b-bit value is spread evenly over its padded extensions, so
        the estimate interpolates linearly between q(y - 1) and q(y).
        """
        w = np.asarray(w, dtype=np.int64)
        y = w >> pad_bits
        u = w & ((1 << pad_bits) - 1)
        lo = self(y - 1)
        hi = self(y)
        return np.clip(lo + (hi - lo) * (u + 1) / float(1 << pad_bits), 0.0, 1.0)


def tree_levels(n, b):
    """Public split of agents into b level-groups of (almost) equal size; levels are 1..b."""
    return (np.arange(n, dtype=np.int64) % b) + 1


def tree_rows(shared_seed, levels, b):
    rows = np.zeros(len(levels), dtype=np.uint64)
    for j in range(1, b + 1):
        mask = levels == j
        rows[mask] = hadamard_rows(derive_seed(shared_seed, j), int(mask.sum()), 1 << j)
    return rows


def tree_encode(values, levels, rows, b, epsilon, rng):
    values = np.asarray(values, dtype=np.int64)
    prefixes = values >> (b - levels)
    return hadamard_encode(prefixes, rows, epsilon, rng)


def tree_aggregate(levels, rows, bits, b, epsilon, alpha=None):
    fractions = []
    for j in range(1, b + 1):
        mask = levels == j
        count = int(mask.sum())
        est = hadamard_aggregate(rows[mask], bits[mask], epsilon, 1 << j)
        fractions.append(est.counts / count if count else np.zeros(1 << j))
    return CdfEstimate(b=b, fractions=fractions, epsilon=float(epsilon), alpha=alpha, n=len(bits))


def cdf_release(agent_values, epsilon, *, b, alpha=None, beta=None, shared_seed=0, rng=None):
    values = np.asarray(agent_values, dtype=np.int64)
    if len(values) == 0:
        raise ValueError("need at least one agent")
    if b < 1 or b > 24:
        raise DomainTooLarge("bit length must be in [1, 24]")
    if values.min() < 0 or values.max() >= (1 << b):
        raise ValueError("value outside {0,1}^b")
    levels = tree_levels(len(values), b)
    rows = tree_rows(shared_seed, levels, b)
    bits = tree_encode(values, levels, rows, b, epsilon, _private_rng(rng, shared_seed))
    return tree_aggregate(levels, rows, bits, b, epsilon, alpha)


def cdf_sample_size(b, alpha, beta, epsilon, constant=1.0):
    """Agents for a uniform alpha-accurate CDF: constant * b^3 / (alpha eps)^2 * ln(b / (alpha beta eps))."""
    log_term = max(1.0, math.log(b / (alpha * beta * epsilon)))
    return math.ceil(constant * b**3 / (alpha**2 * epsilon**2) * log_term)


# -- interactive quantile search ------------------------------------------------


@dataclass(frozen=True)
class QuantileQuery:
    p_star: float
    q_min: float
    q_max: float
    tau_dist: float
    lambda_quant: float = 0.1
    beta_conf: float = 0.1

    def __post_init__(self):
        if not 0 < self.p_star < 1:
            raise ValueError("p_star must lie in (0, 1)")
        if self.q_max < self.q_min:
            raise ValueError("empty search interval")
        if self.tau_dist <= 0:
            raise ValueError("tau_dist must be positive")

    @property
    def rounds(self):
        width = self.q_max - self.q_min
        if width <= self.tau_dist:
            return 0
        return math.ceil(math.log2(width / self.tau_dist))


def quantile_sample_size(query, epsilon, constant=1.0):
    """N >= constant * (8T / lambda^2) * scale^2 * ln(4T / beta) with scale = (e^eps+1)/(e^eps-1)."""
    t = query.rounds
    if t == 0:
        return 0
    return math.ceil(
        constant * 8 * t / query.lambda_quant**2 * rr_scale(epsilon) ** 2 * math.log(4 * t / query.beta_conf)
    )


class QuantileSearch:
    """Referee state for the binary search; one fresh agent group answers each round."""

    def __init__(self, query, epsilon):
        self.query = query
        self.epsilon = epsilon
        self.lo = float(query.q_min)
        self.hi = float(query.q_max)
        self.rounds_done = 0

    @property
    def done(self):
        return self.rounds_done >= self.query.rounds

    @property
    def midpoint(self):
        return (self.lo + self.hi) / 2.0

    def update(self, noisy_bits):
        """Fold in one round of randomized answers to "is your value <= midpoint?"."""
        frac = estimate_bernoulli_mean(noisy_bits, self.epsilon)
        if frac >= self.query.p_star:
            self.hi = self.midpoint
        else:
            self.lo = self.midpoint
        self.rounds_done += 1

    @property
    def estimate(self):
        return (self.lo + self.hi) / 2.0


def split_groups(values, rounds):
    return np.array_split(np.asarray(values), rounds) if rounds else []


def private_quantile(groups, query, epsilon, rng):
    """Binary search for the ``p_star`` quantile, one disjoint agent group per round."""
    search = QuantileSearch(query, epsilon)
    if query.rounds == 0:
        return float(query.q_min)
    if len(groups) < query.rounds:
        raise InsufficientAgents(f"{len(groups)} groups for {query.rounds} rounds")
    for r in range(query.rounds):
        values = np.asarray(groups[r])
        if len(values) == 0:
            raise InsufficientAgents(f"round {r} has no agents")
        answers = (values <= search.midpoint).astype(np.int64)
        search.update(randomized_response(answers, epsilon, rng))
    return search.estimate

"""Trusted-curator mechanisms: exponential mechanism, a proper private parity
learner, private argmax selection and the Laplace mean."""

import math
from dataclasses import dataclass
from typing import Any, Callable, Sequence

import numpy as np

from . import kernels
from .core.parties import CURATOR

MAX_PARITY_BITS = 20


@dataclass(frozen=True)
class LabeledExample:
    x: int
    label: int


@dataclass(frozen=True)
class ScoredCandidateSet:
    candidates: Sequence[Any]
    score: Callable[[Any, Any], float]
    sensitivity: float

    def __post_init__(self):
        if not self.sensitivity > 0:
            raise ValueError("sensitivity must be positive")

    def scores(self, database):
        return np.array([self.score(c, database) for c in self.candidates], dtype=np.float64)


def _charge(ledger, epsilon, partition_tag=None):
    if ledger is not None:
        ledger.charge(CURATOR, epsilon, partition_tag)


def em_probabilities(scores, epsilon, sensitivity):
    """Selection law of the exponential mechanism: p ∝ exp(eps * score / (2 * sensitivity)).

    At ``epsilon = inf`` all mass goes to the lowest-index maximizer.
    """
    scores = np.asarray(scores, dtype=np.float64)
    if len(scores) == 0:
        raise ValueError("no candidates")
    if math.isinf(epsilon):
        p = np.zeros(len(scores))
        p[int(np.argmax(scores))] = 1.0
        return p
    logits = epsilon * (scores - scores.max()) / (2.0 * sensitivity)
    w = np.exp(logits)
    return w / w.sum()


def sample_scores(scores, epsilon, sensitivity, rng):
    p = em_probabilities(scores, epsilon, sensitivity)
    if p.max() == 1.0:
        return int(np.argmax(p))
    # inverse-CDF draw keeps the coin usage to one uniform per call
    cdf = np.cumsum(p)
    return int(min(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"), len(p) - 1))


def exponential_mechanism(candidate_set, database, epsilon, rng, ledger=None, partition_tag=None):
    if len(candidate_set.candidates) == 0:
        raise ValueError("no candidates")
    scores = candidate_set.scores(database)
    _charge(ledger, epsilon, partition_tag)
    return candidate_set.candidates[sample_scores(scores, epsilon, candidate_set.sensitivity, rng)]


def parity(k, x):
    """<k, x> mod 2 for bit-packed integers or arrays of them."""
    k, x = np.broadcast_arrays(np.atleast_1d(k), np.atleast_1d(x))
    out = kernels.parity_and(k.ravel(), x.ravel()).reshape(k.shape)
    if np.ndim(k) == 0 and np.ndim(x) == 0:
        return int(out[0])
    return out


def bits_to_int(bits):
    """Pack a bit vector (or a matrix of row vectors) with bit j of the result = entry j."""
    arr = np.asarray(bits, dtype=np.int64)
    weights = np.left_shift(1, np.arange(arr.shape[-1], dtype=np.int64))
    packed = (arr * weights).sum(axis=-1)
    return int(packed) if arr.ndim == 1 else packed


def int_to_bits(value, c):
    return [(int(value) >> j) & 1 for j in range(c)]


def parity_errors(xs, labels, c):
    """Number of mistakes of every parity k in {0,1}^c on the sample, via one Walsh-Hadamard transform.

    With h[x] = sum of (-1)^label over examples at x, the transform gives
    sum_i (-1)^(label_i + <k, x_i>) = m - 2 * errors(k).
    """
    if c > MAX_PARITY_BITS:
        raise ValueError(f"c = {c} exceeds {MAX_PARITY_BITS}")
    xs = np.asarray(xs, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    signs = 1.0 - 2.0 * (labels & 1)
    h = np.bincount(xs, weights=signs, minlength=1 << c).astype(np.float64)
    return (len(xs) - kernels.fwht(h)) / 2.0


def parity_probabilities(xs, labels, c, epsilon):
    """Exact output law of ``learn_parity_private`` on this sample."""
    errors = parity_errors(xs, labels, c)
    m = max(len(xs), 1)
    return em_probabilities(-errors / m, epsilon, 1.0 / m)


def learn_parity_private(xs, labels, c, epsilon, rng, alpha=None, beta=None, ledger=None, partition_tag=None):
    """Proper private parity learner: exponential mechanism over all 2^c parities scored by empirical error.

    ``alpha`` and ``beta`` only document the target; the sample size decides
    the achieved accuracy (see ``parity_sample_size``). Returns k as a packed int.
    """
    p = parity_probabilities(xs, labels, c, epsilon)
    _charge(ledger, epsilon, partition_tag)
    if p.max() == 1.0:
        return int(np.argmax(p))
    cdf = np.cumsum(p)
    return int(min(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"), len(p) - 1))


def parity_sample_size(c, alpha, beta, epsilon, constant=1.0):
    """m = constant * (c / (alpha eps)) * ln(1 / beta), rounding up; the exponential mechanism needs
    roughly (c ln 2 + ln(1/beta)) / (alpha eps / 2) samples."""
    return math.ceil(constant * c / (alpha * epsilon) * math.log(1.0 / beta))


def empirical_error(k, xs, labels):
    xs = np.asarray(xs, dtype=np.int64)
    if len(xs) == 0:
        return 0.0
    return float(np.mean(parity(k, xs) != (np.asarray(labels) & 1)))


def select_max_coordinate(sample, epsilon, rng, ledger=None):
    """Private argmax of the column means of a {-1, 1}^d sample (score sensitivity 2/m)."""
    sample = np.asarray(sample, dtype=np.float64)
    if sample.ndim != 2 or sample.shape[0] == 0:
        raise ValueError("need a nonempty m x d sample")
    m, d = sample.shape
    means = sample.mean(axis=0)
    _charge(ledger, epsilon)
    if d == 1:
        return 0
    return sample_scores(means, epsilon, 2.0 / m, rng)


def laplace_mean(values, epsilon, rng, lo=0.0, hi=1.0, ledger=None):
    """Mean of values in [lo, hi] plus Laplace noise of scale (hi - lo) / (m eps)."""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("empty input")
    if hi < lo:
        raise ValueError("empty range")
    clipped = np.clip(values, lo, hi)
    _charge(ledger, epsilon)
    mean = float(clipped.mean())
    if math.isinf(epsilon) or hi == lo:
        return mean
    return mean + float(rng.laplace(0.0, (hi - lo) / (len(clipped) * epsilon)))

"""Non-interactive hybrid learner for Par_k(x) xor Thr_t(y).

Agents release a CDF of the y's; the curator sorts its padded sample by y,
cuts it into ceil(1/alpha) blocks and privately learns one parity over
x∘1 per block. The referee routes a query (x, y) to block ceil(q(y)/alpha).
"""

import math
from dataclasses import dataclass

import numpy as np

from ..core import InteractionPattern, ProtocolSpec, PrivacyLedger, run_protocol
from ..core.codec import encode_payload
from ..curator import learn_parity_private, parity
from ..datagen import marginal_probs, threshold
from ..local import TAG_TREE, CdfEstimate, tree_aggregate, tree_encode, tree_levels, tree_rows

TAG_BLOCK_PARITIES = 0x20


def block_count(alpha):
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    return math.ceil(1.0 / alpha - 1e-12)


def pad_width(m, beta):
    """Uniform low-order bits that make a collision among m padded values unlikely (prob <= beta / m^2 per pair)."""
    return max(0, math.ceil(2 * math.log2(max(m, 1)) + math.log2(1.0 / beta)))


def parity_thresh_sizes(b, c, alpha, beta, epsilon, c_m=1.0, c_n=1.0):
    """(m, n) from the sample-size formulas with implementation constants ``c_m`` and ``c_n``."""
    m = math.ceil(c_m * c / (alpha**4 * epsilon) * math.log(1.0 / (alpha * beta)))
    n = math.ceil(c_n * b**3 / (alpha**4 * epsilon**2) * max(1.0, math.log(b / (alpha * beta * epsilon))))
    return m, n


@dataclass
class ParityThreshHypothesis:
    q: CdfEstimate
    k_blocks: np.ndarray
    alpha: float
    pad_bits: int
    c: int

    @property
    def blocks(self):
        return len(self.k_blocks)

    def route(self, y, u):
        """Block index (0-based) for threshold coordinate y padded with low bits u."""
        padded = (np.asarray(y, dtype=np.int64) << self.pad_bits) | np.asarray(u, dtype=np.int64)
        level = np.ceil(self.q.padded(padded, self.pad_bits) / self.alpha - 1e-12).astype(np.int64)
        return np.clip(level, 1, self.blocks) - 1

    def predict(self, x, y, rng):
        y = np.asarray(y, dtype=np.int64)
        u = rng.integers(0, 1 << self.pad_bits, size=y.shape, dtype=np.int64)
        k = self.k_blocks[self.route(y, u)]
        x1 = np.asarray(x, dtype=np.int64) | (1 << self.c)
        return parity(k, x1)

    def routing_weights(self):
        """w[y, l] = fraction of padding values that send y to block l (exact up to 2^-pad_bits)."""
        size = 1 << self.q.b
        ys = np.arange(size)
        lo = self.q(ys - 1)
        hi = self.q(ys)
        edges = np.arange(self.blocks + 1, dtype=np.float64) * self.alpha
        edges[0], edges[-1] = -np.inf, np.inf
        slope = hi - lo
        flat = np.abs(slope) < 1e-15
        safe = np.where(flat, 1.0, slope)
        with np.errstate(invalid="ignore"):
            s_edges = (edges[None, :] - lo[:, None]) / safe[:, None]
        s_edges = np.clip(np.nan_to_num(s_edges, nan=0.0, posinf=np.inf, neginf=-np.inf), 0.0, 1.0)
        weights = np.abs(np.diff(s_edges, axis=1))
        # a flat segment sits entirely in the block containing its value
        level = np.clip(np.ceil(lo / self.alpha - 1e-12).astype(np.int64), 1, self.blocks) - 1
        weights[flat] = 0.0
        weights[flat, level[flat]] = 1.0
        return weights


def generalization_error(hyp, k_star, t_star, probs):
    """Exact error of ``hyp`` against f(x, y) = Par_k*(x) xor Thr_t*(y) for uniform x and y ~ ``probs``.

    For a block vector k_l = (k', nu) the prediction is <x, k'> xor nu. Over
    uniform x it is wrong with probability 1/2 when k' != k*, and otherwise
    wrong exactly when nu != Thr_t*(y).
    """
    size = 1 << hyp.q.b
    mask = (1 << hyp.c) - 1
    ks = np.asarray(hyp.k_blocks, dtype=np.int64)
    match = (ks & mask) == k_star
    nu = (ks >> hyp.c) & 1
    thr = threshold(t_star, np.arange(size))
    per_block = np.where(match[None, :], (nu[None, :] != thr[:, None]).astype(np.float64), 0.5)
    weights = hyp.routing_weights()
    return float(np.sum(probs[:, None] * weights * per_block))


def learn_blocks(records, c, blocks, pad_bits, epsilon_block, rng, charge):
    m = len(records)
    size = m // blocks
    if size == 0:
        raise ValueError(f"{m} curator records cannot fill {blocks} blocks")
    y = records["y"].astype(np.int64)
    u = rng.integers(0, 1 << pad_bits, size=m, dtype=np.int64)
    order = np.argsort((y << pad_bits) | u, kind="stable")
    xs = records["x"].astype(np.int64)[order] | (1 << c)
    labels = records["label"].astype(np.int64)[order]
    ks = np.zeros(blocks, dtype=np.int64)
    for block in range(blocks):
        part = slice(block * size, (block + 1) * size)
        # a changed record can shift every block after sorting, so the blocks compose sequentially
        charge(epsilon_block)
        ks[block] = learn_parity_private(xs[part], labels[part], c + 1, epsilon_block, rng)
    return ks


class ParityThreshProtocol(ProtocolSpec):
    name = "parity-thresh"

    def __init__(self, b, c, epsilon, alpha, beta, pad_bits=None):
        self.b, self.c = b, c
        self.epsilon, self.alpha, self.beta = epsilon, alpha, beta
        self.blocks = block_count(alpha)
        self.pad_bits = pad_bits

    def referee(self, session):
        if session.n == 0:
            raise ValueError("the CDF release needs at least one agent")
        b, eps = self.b, self.epsilon
        pad_bits = pad_width(session.m, self.beta) if self.pad_bits is None else self.pad_bits
        seed = session.shared_seed()
        levels = tree_levels(session.n, b)
        rows = tree_rows(seed, levels, b)

        def agents(ctx):
            bits = tree_encode(ctx.records["y"], levels[ctx.indices], rows[ctx.indices], b, eps, ctx.rng)
            return {"bit": bits}

        reply = session.from_agents(1, session.all_agents(), agents, TAG_TREE, eps)
        q = tree_aggregate(levels, rows, reply["bit"], b, eps, alpha=self.alpha**2)
        block_eps = eps / self.blocks

        def curator(ctx):
            ks = learn_blocks(ctx.records, self.c, self.blocks, pad_bits, block_eps, ctx.rng, ctx.charge)
            return {"k": ks}

        sent = session.from_curator(1, curator, TAG_BLOCK_PARITIES)
        return ParityThreshHypothesis(q, np.asarray(sent["k"]), self.alpha, pad_bits, self.c)

    def encode_output(self, result):
        return encode_payload(TAG_BLOCK_PARITIES, result.k_blocks)


def parity_thresh_hybrid(instance, epsilon, alpha, beta, seed=0, ledger=None, pad_bits=None):
    """Run the protocol on a generated instance; returns ``(hypothesis, transcript, ledger)``."""
    b, c = instance.params["b"], instance.params["c"]
    if ledger is None:
        ledger = PrivacyLedger(epsilon, instance.n)
    spec = ParityThreshProtocol(b, c, epsilon, alpha, beta, pad_bits)
    hyp, transcript = run_protocol(
        spec, instance.curator, instance.agents, InteractionPattern.non_interactive(), ledger, seed
    )
    return hyp, transcript, ledger


def score_parity_thresh(instance, hyp, tolerance=0.35):
    probs = marginal_probs(instance.params["b"], instance.params.get("marginal", "uniform"))
    err = generalization_error(hyp, instance.truth["k_star"], instance.truth["t_star"], probs)
    return err <= tolerance, err

"""Instance generators with hidden ground truth, plus XOR secret sharing.

Records are NumPy structured arrays so that millions of agents stay compact.
Bit vectors of length at most 63 are packed into integers with bit j of the
integer holding coordinate j. Ground truth lives in ``TaskInstance.truth`` and
is only consulted by ``TaskInstance.score``; protocols receive the record
arrays alone.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from . import kernels

MAX_TABLE_BITS = 1 << 26


@dataclass(frozen=True)
class ShareVector:
    shares: np.ndarray
    secret: np.ndarray


def xor_share(secret, m_plus_1, rng):
    """Split a bit vector into ``m_plus_1`` shares whose XOR is the secret."""
    if m_plus_1 < 1:
        raise ValueError("need at least one share")
    secret = np.asarray(secret, dtype=np.uint8) & 1
    shares = rng.integers(0, 2, size=(m_plus_1, len(secret)), dtype=np.uint8)
    shares[-1] = secret ^ np.bitwise_xor.reduce(shares[:-1], axis=0) if m_plus_1 > 1 else secret
    return ShareVector(shares=shares, secret=secret.copy())


def xor_reconstruct(shares):
    rows = [np.asarray(s, dtype=np.uint8) for s in shares]
    if not rows:
        raise ValueError("no shares")
    if any(len(r) != len(rows[0]) for r in rows):
        raise ValueError("shares have different lengths")
    return np.bitwise_xor.reduce(np.stack(rows), axis=0)


def _xor_share_ints(secret, width, count, rng):
    # integer-packed variant used by the generators
    shares = rng.integers(0, 1 << width, size=count, dtype=np.int64) if width else np.zeros(count, dtype=np.int64)
    shares[-1] = secret ^ (np.bitwise_xor.reduce(shares[:-1]) if count > 1 else 0)
    return shares


def threshold(t, y):
    """Thr_t(y) = 1 iff y >= t."""
    return (np.asarray(y) >= t).astype(np.uint8)


def parity_bits(k, x):
    return kernels.parity_and(np.broadcast_to(np.asarray(k, dtype=np.uint64), np.shape(x)), x)


@dataclass
class TaskInstance:
    task: str
    params: dict
    seed: int
    curator: np.ndarray
    agents: np.ndarray
    truth: dict = field(repr=False)

    @property
    def m(self):
        return len(self.curator)

    @property
    def n(self):
        return len(self.agents)

    def score(self, output):
        """``(success, error)`` of a protocol output against the hidden truth."""
        from .tasks.registry import scorer

        return scorer(self.task)(self, output)


# -- marginals for the threshold coordinate -----------------------------------


def marginal_probs(b, spec="uniform"):
    """Distribution over {0, ..., 2^b - 1}. ``point:<v>:<w>`` puts mass w on v, the rest uniform."""
    size = 1 << b
    probs = np.full(size, 1.0 / size)
    if spec == "uniform":
        return probs
    kind, _, rest = spec.partition(":")
    if kind != "point":
        raise ValueError(f"unknown marginal {spec!r}")
    value, weight = rest.split(":")
    value, weight = int(value), float(weight)
    if not 0 <= value < size or not 0 <= weight <= 1:
        raise ValueError(f"bad marginal {spec!r}")
    probs *= 1.0 - weight
    probs[value] += weight
    return probs


def sample_marginal(b, spec, count, rng):
    if spec == "uniform":
        return rng.integers(0, 1 << b, size=count, dtype=np.int64)
    return rng.choice(1 << b, size=count, p=marginal_probs(b, spec)).astype(np.int64)


# -- generators --------------------------------------------------------------

PT_DTYPE = np.dtype([("x", "<u4"), ("y", "<u4"), ("label", "u1")])
CONCAT_DTYPE = np.dtype([("x", "<u4"), ("y", "<u4"), ("par", "u1"), ("thr", "u1")])
ONE_OUT_DTYPE = np.dtype([("branch", "u1"), ("x", "<u4"), ("ips", "<u8"), ("t", "<i4"), ("s", "<u4")])
HYPO_DTYPE = np.dtype([("bit", "u1")])
LABELED_DTYPE = np.dtype([("x", "<u4"), ("label", "u1")])


def pcs_dtype(c):
    return np.dtype([("x", "<u4"), ("label", "u1"), ("t", "<i4"), ("shares", "u1", (max(1, (1 << c) // 8),))])


def select_dtype(d):
    return np.dtype([("v", "i1", (d,))])


def _labeled_xy(b, c, count, k_star, t_star, marginal, rng):
    x = rng.integers(0, 1 << c, size=count, dtype=np.int64) if c else np.zeros(count, dtype=np.int64)
    y = sample_marginal(b, marginal, count, rng)
    return x, y, parity_bits(k_star, x), threshold(t_star, y)


def gen_parity_thresh(b, c, m, n, k_star, t_star, marginal="uniform", seed=0):
    """Examples (x, y, Par_k*(x) xor Thr_t*(y)) with x uniform and y drawn from ``marginal``."""
    _check_sizes(b=b, c=c)
    if not 0 <= t_star <= (1 << b) or not 0 <= k_star < (1 << c):
        raise ValueError("target outside the class")
    rng = np.random.default_rng(seed)
    parts = []
    for count in (m, n):
        x, y, par, thr = _labeled_xy(b, c, count, k_star, t_star, marginal, rng)
        rec = np.zeros(count, dtype=PT_DTYPE)
        rec["x"], rec["y"], rec["label"] = x, y, par ^ thr
        parts.append(rec)
    params = dict(b=b, c=c, m=m, n=n, marginal=marginal)
    truth = dict(k_star=int(k_star), t_star=int(t_star))
    return TaskInstance("parity-thresh", params, seed, parts[0], parts[1], truth)


def gen_concat(b, c, m, n, k_star, t_star, marginal="uniform", seed=0):
    """Examples labeled by the pair (Par_k*(x), Thr_t*(y))."""
    _check_sizes(b=b, c=c)
    rng = np.random.default_rng(seed)
    parts = []
    for count in (m, n):
        x, y, par, thr = _labeled_xy(b, c, count, k_star, t_star, marginal, rng)
        rec = np.zeros(count, dtype=CONCAT_DTYPE)
        rec["x"], rec["y"], rec["par"], rec["thr"] = x, y, par, thr
        parts.append(rec)
    params = dict(b=b, c=c, m=m, n=n, marginal=marginal)
    truth = dict(k_star=int(k_star), t_star=int(t_star))
    return TaskInstance("concat", params, seed, parts[0], parts[1], truth)


def _one_out_records(count, c, d, m, r_table, shares, rng):
    rec = np.zeros(count, dtype=ONE_OUT_DTYPE)
    branch = rng.integers(0, 2, size=count, dtype=np.uint8)
    x = rng.integers(0, 1 << c, size=count, dtype=np.uint64) if c else np.zeros(count, dtype=np.uint64)
    t = rng.integers(0, m + 1, size=count, dtype=np.int64)
    # all 2^d inner products of every possible x, then one table lookup per record
    domain = np.arange(1 << c, dtype=np.uint64)
    table = np.zeros(1 << c, dtype=np.uint64)
    for j, r in enumerate(r_table):
        table |= parity_bits(r, domain).astype(np.uint64) << np.uint64(j)
    ips = table[x]
    is_parity = branch.astype(bool)
    rec["branch"] = branch
    rec["x"] = x * branch
    rec["ips"] = ips * branch
    rec["t"] = np.where(is_parity, -1, t)
    rec["s"] = np.where(is_parity, 0, shares[t])
    return rec


def gen_one_out(d, c, m, n, seed=0, r_table=None, shares=None):
    """Records of the 1-out-of-2^d parity task.

    With probability 1/2 a record is (x, all 2^d inner products <x, r_j>),
    otherwise (t, s_t) for uniform t in [0, m]. The answer is r_s where s is
    the XOR of the m+1 shares. ``r_table`` and ``shares`` may be fixed for
    worst-case sweeps; by default they are uniform.
    """
    if d > 6:
        raise ValueError("d > 6 does not fit the packed inner-product field")
    _check_sizes(c=c)
    rng = np.random.default_rng(seed)
    if r_table is None:
        r_table = rng.integers(0, 1 << c, size=1 << d, dtype=np.int64) if c else np.zeros(1 << d, dtype=np.int64)
    r_table = np.asarray(r_table, dtype=np.int64)
    if len(r_table) != 1 << d:
        raise ValueError("r_table needs 2^d entries")
    if shares is None:
        shares = _xor_share_ints(int(rng.integers(0, 1 << d)) if d else 0, d, m + 1, rng)
    shares = np.asarray(shares, dtype=np.int64)
    if len(shares) != m + 1:
        raise ValueError("need m+1 shares")
    s = int(np.bitwise_xor.reduce(shares))
    curator = _one_out_records(m, c, d, m, r_table, shares, rng)
    agents = _one_out_records(n, c, d, m, r_table, shares, rng)
    params = dict(c=c, d=d, m=m, n=n)
    truth = dict(r_table=r_table.tolist(), shares=shares.tolist(), s=s, answer=int(r_table[s]))
    return TaskInstance("one-out", params, seed, curator, agents, truth)


def gen_pcs(c, m, n, seed=0, r=None, share_table=None):
    """Records (x, <x, r>, t, (s_{j,t})_j) of the parity-chooses-secret task; the answer is s_r.

    ``share_table[j, t]`` holds s_{j,t}; by default every s_j is a uniform bit.
    """
    _check_sizes(c=c)
    if (1 << c) * (m + 1) > MAX_TABLE_BITS:
        raise ValueError("share table too large")
    rng = np.random.default_rng(seed)
    if r is None:
        r = int(rng.integers(0, 1 << c)) if c else 0
    if share_table is None:
        share_table = rng.integers(0, 2, size=(1 << c, m + 1), dtype=np.uint8)
    share_table = np.asarray(share_table, dtype=np.uint8)
    if share_table.shape != (1 << c, m + 1):
        raise ValueError("share table must be 2^c x (m+1)")
    secrets = np.bitwise_xor.reduce(share_table, axis=1)
    # column t of the table, packed little-endian, is what a record with index t carries
    width = max(1, (1 << c) // 8)
    packed_columns = np.zeros((m + 1, width), dtype=np.uint8)
    packed = np.packbits(share_table.T, axis=1, bitorder="little")
    packed_columns[:, : packed.shape[1]] = packed
    dtype = pcs_dtype(c)
    parts = []
    for count in (m, n):
        rec = np.zeros(count, dtype=dtype)
        x = rng.integers(0, 1 << c, size=count, dtype=np.int64) if c else np.zeros(count, dtype=np.int64)
        t = rng.integers(0, m + 1, size=count, dtype=np.int64)
        rec["x"], rec["label"], rec["t"] = x, parity_bits(r, x), t
        rec["shares"] = packed_columns[t]
        parts.append(rec)
    params = dict(c=c, m=m, n=n)
    truth = dict(r=int(r), answer=int(secrets[r]), secrets=secrets.tolist())
    return TaskInstance("pcs", params, seed, parts[0], parts[1], truth)


def pcs_share_bit(shares, j):
    """Bit s_{j,t} from the packed share field of PCS records."""
    return (shares[:, j >> 3] >> (j & 7)) & 1


def gen_select(d, mu, m, n, seed=0):
    """Vectors in {-1, 1}^d with independent coordinates of mean ``mu``."""
    mu = np.asarray(mu, dtype=np.float64)
    if mu.shape != (d,):
        raise ValueError("mu must have length d")
    if np.any(np.abs(mu) > 1):
        raise ValueError("mu outside [-1, 1]^d")
    rng = np.random.default_rng(seed)
    parts = []
    for count in (m, n):
        rec = np.zeros(count, dtype=select_dtype(d))
        rec["v"] = np.where(rng.random((count, d)) < (1 + mu) / 2, 1, -1)
        parts.append(rec)
    params = dict(d=d, m=m, n=n)
    return TaskInstance("select-estimate", params, seed, parts[0], parts[1], dict(mu=mu.tolist()))


def hypo_bias(alpha, j):
    """Pr[bit = 1] under D_j: (1 - alpha)/2 for j = 0 and (1 + alpha)/2 for j = 1."""
    return (1 + alpha) / 2 if j else (1 - alpha) / 2


def sample_hypo(alpha, j, count, rng):
    rec = np.zeros(count, dtype=HYPO_DTYPE)
    rec["bit"] = rng.random(count) < hypo_bias(alpha, j)
    return rec


def gen_hypo(alpha, j, m, n, seed=0, curator_j=None):
    """Bits for hypothesis testing; ``curator_j`` lets the curator draw from the other distribution."""
    if not 0 <= alpha <= 1:
        raise ValueError("alpha must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    cj = j if curator_j is None else curator_j
    curator = sample_hypo(alpha, cj, m, rng)
    agents = sample_hypo(alpha, j, n, rng)
    params = dict(alpha=alpha, m=m, n=n)
    return TaskInstance("hypo-reduce", params, seed, curator, agents, dict(j=int(j), curator_j=int(cj)))


def gen_parity_sample(c, n, k_star, seed=0):
    """Uniform x labeled by Par_k*, held by n agents (no curator)."""
    _check_sizes(c=c)
    rng = np.random.default_rng(seed)
    rec = np.zeros(n, dtype=LABELED_DTYPE)
    x = rng.integers(0, 1 << c, size=n, dtype=np.int64) if c else np.zeros(n, dtype=np.int64)
    rec["x"], rec["label"] = x, parity_bits(k_star, x)
    return TaskInstance(
        "learn-to-select", dict(c=c, m=0, n=n), seed, np.zeros(0, dtype=LABELED_DTYPE), rec, dict(k_star=int(k_star))
    )


def _check_sizes(b=0, c=0):
    if not 0 <= b <= 24:
        raise ValueError("b must lie in [0, 24]")
    if not 0 <= c <= 20:
        raise ValueError("c must lie in [0, 20]")


# -- instance files -----------------------------------------------------------


def _format_value(value):
    return str(value)


def _parse_value(text):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def record_dtype(task, params):
    if task == "parity-thresh":
        return PT_DTYPE
    if task == "concat":
        return CONCAT_DTYPE
    if task == "one-out":
        return ONE_OUT_DTYPE
    if task == "pcs":
        return pcs_dtype(params["c"])
    if task == "select-estimate":
        return select_dtype(params["d"])
    if task == "hypo-reduce":
        return HYPO_DTYPE
    if task == "learn-to-select":
        return LABELED_DTYPE
    raise ValueError(f"unknown task {task!r}")


def _record_line(rec):
    return ",".join(np.asarray(rec[name]).tobytes().hex() for name in rec.dtype.names)


def _parse_record(line, dtype):
    out = np.zeros(1, dtype=dtype)
    hexes = line.split(",")
    if len(hexes) != len(dtype.names):
        raise ValueError("wrong field count")
    for name, text in zip(dtype.names, hexes):
        sub = dtype.fields[name][0]
        out[name] = np.frombuffer(bytes.fromhex(text), dtype=sub.base).reshape(sub.shape)
    return out[0]


def write_instance(instance, path):
    """Write ``path`` (records) and ``path + '.truth'`` (JSON ground truth)."""
    params = ";".join(f"{k}={_format_value(v)}" for k, v in sorted(instance.params.items()))
    with open(path, "w") as fh:
        fh.write(f"{instance.task},{params},{instance.seed}\n")
        for part in (instance.curator, instance.agents):
            for rec in part:
                fh.write(_record_line(rec) + "\n")
    with open(str(path) + ".truth", "w") as fh:
        json.dump(instance.truth, fh, sort_keys=True)


def read_instance(path):
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        task, params_text, seed = header.split(",")
        params = {}
        for item in filter(None, params_text.split(";")):
            key, _, value = item.partition("=")
            params[key] = _parse_value(value)
        dtype = record_dtype(task, params)
        lines = [line.rstrip("\n") for line in fh if line.strip()]
    m, n = params["m"], params["n"]
    if len(lines) != m + n:
        raise ValueError(f"expected {m + n} records, found {len(lines)}")
    records = np.array([_parse_record(line, dtype) for line in lines], dtype=dtype)
    try:
        with open(str(path) + ".truth") as fh:
            truth = json.load(fh)
    except FileNotFoundError:
        truth = {}
    return TaskInstance(task, params, int(seed), records[:m], records[m:], truth)

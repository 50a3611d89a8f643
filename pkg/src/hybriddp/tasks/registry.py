"""Stable task names for the command line: how to size, generate, run and score each task."""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .. import datagen
from ..core import InteractionPattern, PrivacyLedger, run_protocol
from .concat import ConcatProtocol, concat_learn, concat_sizes, score_concat
from .one_out import one_out_of_2d_parity, one_out_sizes, score_one_out
from .parity_thresh import parity_thresh_hybrid, parity_thresh_sizes, score_parity_thresh
from .pcs import parity_chooses_secret, pcs_sizes, score_pcs
from .reductions import (
    HybridTestProtocol,
    ParityClass,
    learning_sample_size,
    private_selection,
    profile_hybrid,
    reduce_hybrid_test,
    reduce_learning_to_selection,
)
from .select_estimate import score_select, select_then_estimate

DEFAULTS = {
    "b": 8, "c": 4, "d": 3, "m": 0, "n": 0, "eps": 1.0, "alpha": 0.25,
    "alpha_prime": 0.1, "beta": 0.25, "trials": 10, "seed": 0,
}  # fmt: skip


@dataclass
class Task:
    name: str
    pattern: object  # pattern text, or a function of the resolved parameters
    sizes: Callable
    generate: Callable
    run: Callable
    score: Callable
    defaults: dict = field(default_factory=dict)

    def resolve(self, params):
        """Fill defaults, then fill m and n from the size formulas when they are 0."""
        merged = {**DEFAULTS, **self.defaults, **{k: v for k, v in params.items() if v is not None}}
        if not merged["m"] or not merged["n"]:
            m, n = self.sizes(merged)
            merged["m"] = merged["m"] or m
            merged["n"] = merged["n"] or n
        return merged

    def pattern_for(self, params):
        return self.pattern(params) if callable(self.pattern) else self.pattern


def _rng_target(params, rng):
    c, b = params["c"], params["b"]
    return int(rng.integers(0, 1 << c)), int(rng.integers(0, (1 << b) + 1))


def _gen_pt(p, seed):
    k, t = _rng_target(p, np.random.default_rng(seed))
    return datagen.gen_parity_thresh(p["b"], p["c"], p["m"], p["n"], k, t, p.get("marginal", "uniform"), seed)


def _gen_concat(p, seed):
    k, t = _rng_target(p, np.random.default_rng(seed))
    return datagen.gen_concat(p["b"], p["c"], p["m"], p["n"], k, t, p.get("marginal", "uniform"), seed)


def _select_mu(p):
    d = p["d"]
    return np.linspace(0.5, 0.5 - 0.5 * (d - 1) / max(d - 1, 1), d) if d > 1 else np.array([0.5])


def _run_hypo(inst, p, seed):
    """Profile the hybrid test, then run the one-sided construction on the instance's agents."""
    hybrid = HybridTestProtocol(p["eps"])
    m = int(p.get("hybrid_m", 20))
    profile = profile_hybrid(hybrid, p["alpha"], m, inst.n, int(p.get("profile_trials", 200)), seed)
    wrapped = reduce_hybrid_test(hybrid, p["alpha"], m, inst.n, profile)
    ledger = PrivacyLedger(p["eps"], inst.n)
    if profile.branch == "local":
        out, tx = run_protocol(wrapped, None, inst.agents, InteractionPattern.non_interactive(), ledger, seed)
    else:
        out, tx = run_protocol(wrapped, inst.curator, None, InteractionPattern.non_interactive(), ledger, seed)
    return out, tx, ledger


def _score_hypo(inst, out, p):
    ok = out == inst.truth["j"]
    return ok, 0.0 if ok else 1.0


def _run_learn(inst, p, seed):
    rng = np.random.default_rng(seed)
    concepts = ParityClass(p["c"])
    index, _ = reduce_learning_to_selection(
        private_selection(p["eps"], rng), concepts, inst.agents["x"], inst.agents["label"]
    )
    return index, None, None


def _score_learn(inst, out, p):
    from ..curator import empirical_error

    err = empirical_error(out, inst.agents["x"], inst.agents["label"])
    return err <= 4 * p.get("alpha", 0.1), err


TASKS = {
    "parity-thresh": Task(
        "parity-thresh",
        "non-interactive",
        lambda p: parity_thresh_sizes(p["b"], p["c"], p["alpha"], p["beta"], p["eps"]),
        _gen_pt,
        lambda inst, p, seed: parity_thresh_hybrid(inst, p["eps"], p["alpha"], p["beta"], seed),
        lambda inst, out, p: score_parity_thresh(inst, out, p.get("tolerance", 0.35)),
    ),
    "concat": Task(
        "concat",
        lambda p: str(ConcatProtocol(p["b"], p["c"], p["eps"], p["alpha"], p["beta"]).pattern),
        lambda p: concat_sizes(p["b"], p["c"], p["alpha"], p["beta"], p["eps"]),
        _gen_concat,
        lambda inst, p, seed: concat_learn(inst, p["eps"], p["alpha"], p["beta"], seed),
        lambda inst, out, p: score_concat(inst, out, p.get("tolerance", p["alpha"])),
        {"b": 16},
    ),
    "one-out": Task(
        "one-out",
        "local-then-curator",
        lambda p: one_out_sizes(p["c"], p["d"], p["eps"], p["beta"]),
        lambda p, seed: datagen.gen_one_out(p["d"], p["c"], p["m"], p["n"], seed),
        lambda inst, p, seed: one_out_of_2d_parity(inst, p["eps"], p["beta"], seed),
        lambda inst, out, p: score_one_out(inst, out),
        {"c": 8},
    ),
    "pcs": Task(
        "pcs",
        "curator-then-local",
        lambda p: pcs_sizes(p["c"], p["eps"], p["beta"]),
        lambda p, seed: datagen.gen_pcs(p["c"], p["m"], p["n"], seed),
        lambda inst, p, seed: parity_chooses_secret(inst, p["eps"], p["beta"], seed),
        lambda inst, out, p: score_pcs(inst, out),
        {"c": 8},
    ),
    "select-estimate": Task(
        "select-estimate",
        "curator-then-local",
        lambda p: (2000, 20000),
        lambda p, seed: datagen.gen_select(p["d"], _select_mu(p), p["m"], p["n"], seed),
        lambda inst, p, seed: select_then_estimate(inst, p["eps"], p["alpha"], p["alpha_prime"], seed),
        lambda inst, out, p: score_select(inst, out, p["alpha"], p["alpha_prime"]),
        {"d": 64},
    ),
    "hypo-reduce": Task(
        "hypo-reduce",
        "non-interactive",
        lambda p: (20, 100),
        lambda p, seed: datagen.gen_hypo(p["alpha"], int(seed) % 2, p["m"], p["n"], seed),
        _run_hypo,
        _score_hypo,
        {"alpha": 0.2},
    ),
    "learn-to-select": Task(
        "learn-to-select",
        "non-interactive",
        lambda p: (0, learning_sample_size(p["c"], p["alpha"])),
        lambda p, seed: datagen.gen_parity_sample(
            p["c"], p["n"], int(np.random.default_rng(seed).integers(0, 1 << p["c"])), seed
        ),
        _run_learn,
        _score_learn,
        {"alpha": 0.1},
    ),
}


def get_task(name):
    try:
        return TASKS[name]
    except KeyError:
        raise ValueError(f"unknown task {name!r}; choose from {', '.join(sorted(TASKS))}") from None


_SCORERS = {
    "parity-thresh": lambda inst, out, **kw: score_parity_thresh(inst, out, **kw),
    "concat": lambda inst, out, **kw: score_concat(inst, out, **kw),
    "one-out": lambda inst, out, **kw: score_one_out(inst, out),
    "pcs": lambda inst, out, **kw: score_pcs(inst, out),
    "select-estimate": lambda inst, out, alpha=0.25, alpha_prime=0.1: score_select(inst, out, alpha, alpha_prime),
    "hypo-reduce": lambda inst, out, **kw: _score_hypo(inst, out, kw),
    "learn-to-select": lambda inst, out, alpha=0.1: _score_learn(inst, out, {"alpha": alpha}),
}


def scorer(task):
    return _SCORERS[task]


__all__ = ["TASKS", "Task", "get_task", "scorer"]

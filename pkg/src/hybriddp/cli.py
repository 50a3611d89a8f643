"""Experiment harness: run trial batches for every registered task and write CSV rows."""

import argparse
import csv
import io
import os
import sys
import time
from dataclasses import dataclass, field

from . import audit, datagen
from .core import InteractionPattern, Transcript, derive_seed, validate_pattern
from .tasks.registry import DEFAULTS, TASKS, get_task

COLUMNS = [
    "task", "b", "c", "d", "m", "n", "eps", "alpha", "alpha_prime", "beta",
    "pattern", "trials", "successes", "rate", "mean_err", "ms",
]  # fmt: skip

_INT = {"b", "c", "d", "m", "n", "trials", "seed", "hybrid_m", "profile_trials"}
_FLOAT = {"eps", "alpha", "alpha_prime", "beta", "tolerance", "min_rate", "max_mean_err"}
_STR = {"task", "pattern", "output", "marginal", "transcripts"}
_BOOL = {"timing"}
KNOWN = _INT | _FLOAT | _STR | _BOOL


class ConfigError(ValueError):
    pass


def _convert(key, raw, where):
    if key not in KNOWN:
        raise ConfigError(f"{where}: unknown key {key!r}")
    if raw is None:
        return None
    if not isinstance(raw, str):
        return raw
    try:
        if key in _INT:
            return int(raw)
        if key in _FLOAT:
            return float(raw)
    except ValueError:
        kind = "an integer" if key in _INT else "a number"
        raise ConfigError(f"{where}: {key} must be {kind}, got {raw!r}") from None
    if key in _BOOL:
        lowered = raw.strip().lower()
        if lowered not in ("true", "false", "1", "0", "yes", "no"):
            raise ConfigError(f"{where}: {key} must be true or false, got {raw!r}")
        return lowered in ("true", "1", "yes")
    return raw.strip()


def parse_config_text(text, source="<config>"):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        key = key.strip()
        values[key] = _convert(key, value.strip(), f"{source}:{lineno}")
    return values


@dataclass
class ExperimentConfig:
    task: str
    params: dict = field(default_factory=dict)
    output: str | None = None

    @classmethod
    def from_mapping(cls, values):
        values = {k: _convert(k, v, "config") for k, v in values.items() if v is not None}
        if "task" not in values:
            raise ConfigError("config: task is required")
        task = values.pop("task")
        get_task(task)
        output = values.pop("output", None)
        if "seed" not in values:
            env = os.environ.get("HYBRIDDP_SEED")
            values["seed"] = _convert("seed", env, "HYBRIDDP_SEED") if env else 0
        return cls(task, values, output)

    def with_value(self, key, value):
        return ExperimentConfig(self.task, {**self.params, key: _convert(key, value, "sweep")}, self.output)


@dataclass
class ResultRow:
    task: str
    params: dict
    pattern: str
    trials: int
    successes: int
    mean_err: float | None
    ms: float

    @property
    def rate(self):
        return self.successes / self.trials if self.trials else 0.0

    def cells(self, timing):
        p = self.params
        return [
            self.task, p["b"], p["c"], p["d"], p["m"], p["n"],
            _num(p["eps"]), _num(p["alpha"]), _num(p["alpha_prime"]), _num(p["beta"]),
            self.pattern, self.trials, self.successes, _num(self.rate),
            "" if self.mean_err is None else _num(self.mean_err),
            f"{self.ms:.1f}" if timing else "",
        ]  # fmt: skip


def _num(x):
    return repr(float(x))


def _validate_rates(task, p):
    if p["trials"] < 0:
        raise ConfigError(f"{task.name}: trials must be nonnegative")
    if not p["eps"] > 0:
        raise ConfigError(f"{task.name}: eps must be positive, got {p['eps']}")
    for key in ("alpha", "alpha_prime", "beta"):
        if not 0 < p[key] < 1:
            raise ConfigError(f"{task.name}: {key} must lie in (0, 1), got {p[key]}")
    for key in ("b", "c", "d", "m", "n"):
        if p[key] < 0:
            raise ConfigError(f"{task.name}: {key} must be nonnegative, got {p[key]}")


def _validate(task, p):
    _validate_rates(task, p)
    if task.name == "one-out" and p["beta"] <= 1.0 / max(p["m"], 1):
        raise ConfigError(f"one-out: beta must exceed 1/m = {1.0 / p['m']:.4g}")
    if task.name == "one-out" and p["d"] > 6:
        raise ConfigError("one-out: d must be at most 6")


def _resolve(config):
    """Task and full parameter map; rates are checked before the size formulas see them."""
    task = get_task(config.task)
    _validate_rates(task, {**DEFAULTS, **task.defaults, **config.params})
    params = task.resolve(config.params)
    _validate(task, params)
    return task, params


def run_experiment(config):
    """Run ``trials`` independent trials and return a one-row list (empty for zero trials)."""
    task, params = _resolve(config)
    trials = params["trials"]
    if trials == 0:
        return []
    pattern_text = params.get("pattern") or task.pattern_for(params)
    pattern = InteractionPattern.parse(pattern_text)
    tx_dir = params.get("transcripts")
    successes, errors = 0, []
    start = time.perf_counter()
    for t in range(trials):
        seed = derive_seed(params["seed"], t)
        inst = task.generate(params, seed)
        out, transcript, _ = task.run(inst, params, derive_seed(seed, 1))
        ok, err = task.score(inst, out, params)
        if transcript is not None:
            ok = ok and validate_pattern(transcript, pattern)
            if tx_dir:
                os.makedirs(tx_dir, exist_ok=True)
                with open(os.path.join(tx_dir, f"{task.name}-{t}.txt"), "w") as fh:
                    transcript.dump(fh)
        successes += bool(ok)
        if err is not None:
            errors.append(float(err))
    ms = 1000.0 * (time.perf_counter() - start)
    mean_err = sum(errors) / len(errors) if errors else None
    return [ResultRow(task.name, params, str(pattern), trials, successes, mean_err, ms)]


def sweep(config, axis, values):
    """``run_experiment`` at each value of ``axis``; rows are sorted by that value."""
    if axis not in KNOWN:
        raise ConfigError(f"sweep: unknown axis {axis!r}")
    rows = []
    for value in values:
        rows.extend(run_experiment(config.with_value(axis, value)))
    return sorted(rows, key=lambda r: r.params[axis])


def rows_to_csv(rows, timing=False):
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(COLUMNS)
    for row in rows:
        writer.writerow(row.cells(timing))
    return out.getvalue()


def thresholds_met(rows, params):
    """Check ``min_rate`` and ``max_mean_err`` from the config against every row."""
    min_rate = params.get("min_rate")
    max_err = params.get("max_mean_err")
    for row in rows:
        if min_rate is not None and row.rate < min_rate:
            return False
        if max_err is not None and row.mean_err is not None and row.mean_err > max_err:
            return False
    return True


# -- argument handling -------------------------------------------------------------


def _add_params(parser):
    parser.add_argument("--config", help="key = value file; flags override its values")
    parser.add_argument("--task", choices=sorted(TASKS))
    for key in sorted(_INT | _FLOAT):
        parser.add_argument(f"--{key.replace('_', '-')}", dest=key, default=None)
    for key in ("pattern", "output", "marginal", "transcripts"):
        parser.add_argument(f"--{key}", dest=key, default=None)
    parser.add_argument("--timing", dest="timing", action="store_const", const="true", default=None,
                        help="fill the ms column (off by default so output is byte-stable)")  # fmt: skip


def _config_from_args(args):
    values = {}
    if args.config:
        with open(args.config) as fh:
            values.update(parse_config_text(fh.read(), args.config))
    for key in KNOWN:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    return ExperimentConfig.from_mapping(values)


def _emit(text, path):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_run(args):
    config = _config_from_args(args)
    rows = run_experiment(config)
    _emit(rows_to_csv(rows, config.params.get("timing", False)), config.output)
    return 0 if thresholds_met(rows, config.params) else 1


def _cmd_sweep(args):
    config = _config_from_args(args)
    values = [v for v in args.values.split(",") if v.strip()]
    rows = sweep(config, args.axis, values)
    _emit(rows_to_csv(rows, config.params.get("timing", False)), config.output)
    return 0 if thresholds_met(rows, config.params) else 1


def _cmd_audit(args):
    epsilons = [float(e) for e in args.eps.split(",")]
    audits = audit.standard_audits(epsilons, args.domain)
    _emit(audit.audit_csv(audits), args.output)
    return 0 if all(a.passed for a in audits) else 1


def _cmd_gen(args):
    config = _config_from_args(args)
    task, params = _resolve(config)
    if not config.output:
        raise ConfigError("gen: --output is required")
    datagen.write_instance(task.generate(params, params["seed"]), config.output)
    return 0


def _cmd_validate(args):
    with open(args.transcript) as fh:
        transcript = Transcript.load(fh)
    ok = validate_pattern(transcript, InteractionPattern.parse(args.pattern))
    print(f"{args.pattern}: {'valid' if ok else 'violated'}")
    return 0 if ok else 1


def build_parser():
    parser = argparse.ArgumentParser(prog="hybriddp", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a batch of trials")
    _add_params(run)
    run.set_defaults(func=_cmd_run)

    sw = sub.add_parser("sweep", help="run a batch at each value of one parameter")
    _add_params(sw)
    sw.add_argument("--axis", required=True)
    sw.add_argument("--values", required=True, help="comma-separated")
    sw.set_defaults(func=_cmd_sweep)

    au = sub.add_parser("audit", help="exact channel audits of the local randomizers")
    au.add_argument("--eps", default="0.5,1,2")
    au.add_argument("--domain", type=int, default=8)
    au.add_argument("--output")
    au.set_defaults(func=_cmd_audit)

    gen = sub.add_parser("gen", help="write an instance file")
    _add_params(gen)
    gen.set_defaults(func=_cmd_gen)

    val = sub.add_parser("validate", help="check a transcript file against a pattern")
    val.add_argument("transcript")
    val.add_argument("--pattern", required=True, help="e.g. local-then-curator:3")
    val.set_defaults(func=_cmd_validate)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"hybriddp: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"hybriddp: invalid configuration: {exc}", file=sys.stderr)
        return 2

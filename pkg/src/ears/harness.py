"""Experiment runner: ``simulate``, ``sweep`` and ``oracle-check`` subcommands.

Config files are YAML mappings whose keys are the fields of
:class:`ExperimentConfig`; command-line flags override them. Single runs
write a JSON report, sweeps write CSV. Both carry ``schema_version``.

Exit codes: 0 success, 1 runtime failure (or a failed oracle check),
2 invalid configuration or usage.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np
import yaml

from .dist import ProbDist, Rng, tv_distance
from .engine import CostModel, RunStats, run_batch, throughput_estimate
from .errors import ConfigError, EarsError
from .models import ModelPair, make_coupled_pair
from .montecarlo import binomial_z, multinomial_z
from .oracle import (
    exact_induced_distribution,
    grid_induced_distribution,
    predicted_throughput,
    random_pair,
    step_oracle,
)
from .verifier import Decision, PolicyConfig, simulate_one_step

SCHEMA_VERSION = 1
POLICIES = ("baseline", "ears")
SWEEP_AXES = ("beta", "temperature", "gamma", "divergence")
SWEEP_COLUMNS = (
    "schema_version", "axis", "value", "policy",
    "beta", "temperature", "gamma", "divergence",
    "target_calls", "tokens_emitted", "draft_tokens_generated",
    "primary_accepts", "pardon_accepts", "rejects",
    "accept_rate", "mean_accepted_len", "pardon_share", "pardon_rescue_rate", "tokens_per_call",
    "mean_uncertainty", "throughput", "uplift", "bias_tv",
)


@dataclass
class ExperimentConfig:
    seed: int = 0
    vocab_size: int = 64
    order: int = 0
    divergence: float = 0.5
    temperature: float = 0.9
    gamma: int = 5
    beta: float = 0.1
    epsilon: float = 1e-10
    n_tokens: int = 40000
    batch_lanes: int = 1
    cost_target: float = 10.0
    cost_draft: float = 1.0
    policies: list = field(default_factory=lambda: list(POLICIES))
    max_rows: int = 4096
    sweep_axis: str = "beta"
    sweep_grid: list = field(default_factory=lambda: [0.0, 0.05, 0.1, 0.2])


_INT_FIELDS = {"seed", "vocab_size", "order", "gamma", "n_tokens", "batch_lanes", "max_rows"}
_FLOAT_FIELDS = {"divergence", "temperature", "beta", "epsilon", "cost_target", "cost_draft"}


def _field_problem(name, value):
    """Return an error message for one field value, or None."""
    if name in _INT_FIELDS:
        if isinstance(value, bool) or not isinstance(value, int):
            return f"expected an integer, got {value!r}"
        lo = {"seed": 0, "order": 0, "vocab_size": 2}.get(name, 1)
        if value < lo:
            return f"must be >= {lo}"
        if name == "seed" and value >= 1 << 64:
            return "must fit in 64 unsigned bits"
    elif name in _FLOAT_FIELDS:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            return f"expected a finite number, got {value!r}"
        if name in ("divergence", "beta") and value < 0:
            return "must be >= 0"
        if name in ("temperature", "epsilon", "cost_target", "cost_draft") and value <= 0:
            return "must be > 0"
    elif name == "policies":
        if not isinstance(value, list) or not value or any(p not in POLICIES for p in value):
            return f"expected a non-empty list drawn from {list(POLICIES)}"
    elif name == "sweep_axis":
        if value not in SWEEP_AXES:
            return f"expected one of {list(SWEEP_AXES)}"
    elif name == "sweep_grid":
        if not isinstance(value, list) or not value:
            return "expected a non-empty list"
    return None


def _grid_problem(axis, grid):
    for v in grid:
        if axis == "gamma":
            bad = isinstance(v, bool) or not isinstance(v, int) or v < 1
        else:
            bad = isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v)
            bad = bad or (v <= 0 if axis == "temperature" else v < 0)
        if bad:
            return f"invalid {axis} grid value {v!r}"
    return None


def load_config(path=None, overrides=None) -> ExperimentConfig:
    """Parse a YAML config, apply overrides, validate. Raises ConfigError with line numbers."""
    values, lines, where = {}, {}, "<flags>"
    if path is not None:
        where = str(path)
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"{where}: cannot read config: {exc}") from exc
        try:
            node = yaml.compose(text)
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"{where}: {exc}") from exc
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise ConfigError(f"{where}: top level must be a mapping")
        if node is not None:
            for k, _ in node.value:
                lines[k.value] = k.start_mark.line + 1
        values = dict(data)
    known = {f.name for f in fields(ExperimentConfig)}
    problems = []
    version = values.pop("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        problems.append(f"{where}:{lines.get('schema_version', '?')}: field 'schema_version': "
                        f"unsupported version {version!r}")
    for k in values:
        if k not in known:
            problems.append(f"{where}:{lines.get(k, '?')}: unknown field {k!r}")
    for k, v in (overrides or {}).items():
        if v is not None:
            values[k] = v
            lines[k] = "flag"
    for k, v in values.items():
        if k in known:
            msg = _field_problem(k, v)
            if msg:
                problems.append(f"{where}:{lines.get(k, '?')}: field {k!r}: {msg}")
    if problems:
        raise ConfigError("\n".join(problems))
    cfg = ExperimentConfig(**{k: v for k, v in values.items() if k in known})
    cfg.divergence, cfg.temperature, cfg.beta = float(cfg.divergence), float(cfg.temperature), float(cfg.beta)
    cfg.epsilon, cfg.cost_target, cfg.cost_draft = float(cfg.epsilon), float(cfg.cost_target), float(cfg.cost_draft)
    msg = _grid_problem(cfg.sweep_axis, cfg.sweep_grid)
    if msg:
        raise ConfigError(f"{where}:{lines.get('sweep_grid', '?')}: field 'sweep_grid': {msg}")
    return cfg


def policy_config(name: str, cfg: ExperimentConfig) -> PolicyConfig:
    if name == "baseline":
        return PolicyConfig.baseline(cfg.epsilon)
    return PolicyConfig.ears(cfg.beta, cfg.epsilon)


def build_pair(cfg: ExperimentConfig) -> ModelPair:
    return make_coupled_pair(cfg.seed, cfg.vocab_size, cfg.order, cfg.divergence,
                             cfg.temperature, cfg.max_rows)


def run_policy(pair: ModelPair, pc: PolicyConfig, cfg: ExperimentConfig):
    """All lanes of one policy; returns (per-lane token lists, merged stats)."""
    lanes = [Rng(cfg.seed, lane) for lane in range(cfg.batch_lanes)]
    results = run_batch(pair, pc, cfg.gamma, cfg.n_tokens, lanes)
    return [toks for toks, _ in results], RunStats.merged([s for _, s in results])


def oracle_summary(pair: ModelPair, beta: float, epsilon: float) -> dict:
    """One-step oracle averaged uniformly over context rows (exact for order 0)."""
    rates, biases = [], []
    for r in range(pair.n_rows):
        o = step_oracle(pair.target_row(r), pair.draft_row(r), beta, epsilon)
        rates.append(o.overall_accept_rate)
        biases.append(o.bias_tv)
    return {"accept_rate": float(np.mean(rates)), "bias_tv": float(np.mean(biases))}


def empirical_tv(pair: ModelPair, lane_tokens, min_count: int | None = None):
    """Count-weighted TV between emitted-token frequencies and target rows.

    Only rows seen at least ``min_count`` (default ``10 * V``) times count.
    Returns ``(tv, positions_used)``; tv is None when no row qualifies.
    """
    V = pair.vocab_size
    min_count = 10 * V if min_count is None else min_count
    counts = np.zeros((pair.n_rows, V), dtype=np.int64)
    for toks in lane_tokens:
        for j, t in enumerate(toks):
            counts[pair.context_row(toks[max(0, j - pair.context_order):j]), t] += 1
    total, used = 0.0, 0
    for r in np.flatnonzero(counts.sum(axis=1) >= min_count):
        n = int(counts[r].sum())
        total += n * tv_distance(ProbDist(counts[r] / n), pair.target_row(int(r)))
        used += n
    return (total / used if used else None), used


def policy_report(pair, pc, cfg, cost):
    lane_tokens, stats = run_policy(pair, pc, cfg)
    thr = throughput_estimate(stats, cost)
    etv, used = empirical_tv(pair, lane_tokens)
    oracle = oracle_summary(pair, pc.effective_beta, pc.epsilon)
    if pair.n_rows == 1:
        oracle["predicted_throughput"] = predicted_throughput(
            oracle["accept_rate"], cfg.gamma, cost.c_target, cost.c_draft)
    return {
        "counters": stats.counters(),
        "throughput": thr,
        "cost_per_token": 1.0 / thr,
        "accept_rate": stats.accept_rate,
        "mean_accepted_len": stats.mean_accepted_len,
        "pardon_share": stats.pardon_share,
        "pardon_rescue_rate": stats.pardon_rescue_rate,
        "tokens_per_call": stats.tokens_per_call,
        "mean_uncertainty": stats.mean_uncertainty,
        "mean_entropy": stats.mean_entropy,
        "empirical_tv": etv,
        "empirical_tv_positions": used,
        "oracle": oracle,
    }


def simulate(cfg: ExperimentConfig) -> dict:
    pair = build_pair(cfg)
    cost = CostModel(cfg.cost_target, cfg.cost_draft)
    rows = {name: policy_report(pair, policy_config(name, cfg), cfg, cost) for name in cfg.policies}
    report = {
        "schema_version": SCHEMA_VERSION,
        "config": {k: v for k, v in asdict(cfg).items() if not k.startswith("sweep_")},
        "policies": rows,
        "uplift": None,
        "predicted_uplift": None,
    }
    if "baseline" in rows and "ears" in rows:
        report["uplift"] = rows["ears"]["throughput"] / rows["baseline"]["throughput"] - 1.0
        if pair.n_rows == 1:
            report["predicted_uplift"] = (rows["ears"]["oracle"]["predicted_throughput"]
                                          / rows["baseline"]["oracle"]["predicted_throughput"] - 1.0)
    return report


def dump_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def sweep(cfg: ExperimentConfig, axis: str | None = None, grid=None) -> list[dict]:
    axis = axis or cfg.sweep_axis
    grid = list(cfg.sweep_grid if grid is None else grid)
    if axis not in SWEEP_AXES:
        raise ConfigError(f"unknown sweep axis {axis!r}")
    if not grid:
        raise ConfigError("sweep grid is empty")
    msg = _grid_problem(axis, grid)
    if msg:
        raise ConfigError(msg)
    cost = CostModel(cfg.cost_target, cfg.cost_draft)
    out = []
    for value in grid:
        point = replace(cfg, **{axis: int(value) if axis == "gamma" else float(value)})
        pair = build_pair(point)
        thr = {}
        rows = []
        for name in point.policies:
            pc = policy_config(name, point)
            _, stats = run_policy(pair, pc, point)
            thr[name] = throughput_estimate(stats, cost)
            rows.append({
                "schema_version": SCHEMA_VERSION, "axis": axis, "value": value, "policy": name,
                "beta": pc.effective_beta, "temperature": point.temperature, "gamma": point.gamma,
                "divergence": point.divergence,
                "target_calls": stats.target_calls, "tokens_emitted": stats.tokens_emitted,
                "draft_tokens_generated": stats.draft_tokens_generated,
                "primary_accepts": stats.primary_accepts, "pardon_accepts": stats.pardon_accepts,
                "rejects": stats.rejects, "accept_rate": stats.accept_rate,
                "mean_accepted_len": stats.mean_accepted_len, "pardon_share": stats.pardon_share,
                "pardon_rescue_rate": stats.pardon_rescue_rate,
                "tokens_per_call": stats.tokens_per_call, "mean_uncertainty": stats.mean_uncertainty,
                "throughput": thr[name], "uplift": None,
                "bias_tv": oracle_summary(pair, pc.effective_beta, pc.epsilon)["bias_tv"],
            })
        if "baseline" in thr:
            for row in rows:
                row["uplift"] = thr[row["policy"]] / thr["baseline"] - 1.0
        out.extend(rows)
    return out


def dump_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: ("" if row[k] is None else repr(row[k]) if isinstance(row[k], float) else row[k])
                    for k in SWEEP_COLUMNS})
    return buf.getvalue()


BETA_GRID = (0.0, 0.05, 0.1, 0.2)


def oracle_check(seed: int = 0, n_pairs: int = 100, vocab_size: int = 32, trials: int = 200_000,
                 grid_pairs: int = 20, out=None) -> bool:
    """Run the oracle invariant suite on random pairs and print a transcript.

    Monte Carlo checks use a z bound Bonferroni-corrected to a 1e-3
    family-wise false-alarm rate over all pairs.
    """
    from scipy.stats import norm

    out = out or sys.stdout
    if n_pairs < 1 or vocab_size < 2:
        raise ConfigError("n_pairs must be >= 1 and vocab_size >= 2")
    gen = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(0xC4EC,))))
    z_max = float(norm.isf(1e-3 / (4 * n_pairs)))
    print(f"oracle-check seed={seed} n_pairs={n_pairs} vocab_size<={vocab_size} trials={trials} "
          f"z_max={z_max:.3f}", file=out)
    failures = 0
    for k in range(n_pairs):
        V = int(gen.integers(2, vocab_size + 1))
        p_t, p_d = random_pair(gen, V, zero_frac=0.2 if k % 4 == 3 else 0.0)
        problems = []
        lossless = float(np.abs(exact_induced_distribution(p_t, p_d, 0.0).probs - p_t.probs).max())
        if not lossless < 1e-12:
            problems.append(f"lossless err={lossless:.3e}")
        rates = [step_oracle(p_t, p_d, b).overall_accept_rate for b in BETA_GRID]
        if any(b < a for a, b in zip(rates, rates[1:])):
            problems.append("beta-monotonicity " + ",".join(f"{r:.6f}" for r in rates))
        beta = BETA_GRID[k % len(BETA_GRID)]
        o = step_oracle(p_t, p_d, beta)
        toks, dec = simulate_one_step(p_t, p_d, PolicyConfig.ears(beta), trials, Rng(seed, k))
        z_acc = binomial_z(int(np.count_nonzero(dec != int(Decision.REJECT))), trials, o.overall_accept_rate)
        z_out = multinomial_z(np.bincount(toks, minlength=V), o.induced.probs)
        if z_acc > z_max or z_out > z_max:
            problems.append(f"monte-carlo z_accept={z_acc:.2f} z_output={z_out:.2f}")
        grid_err = None
        if k < grid_pairs:
            grid_err = float(np.abs(grid_induced_distribution(p_t, p_d, beta).probs - o.induced.probs).max())
            if not grid_err < 1e-5:
                problems.append(f"grid err={grid_err:.3e}")
        status = "ok" if not problems else "FAIL " + "; ".join(problems)
        grid_txt = "" if grid_err is None else f" grid_err={grid_err:.2e}"
        print(f"pair {k:03d} V={V:2d} beta={beta:.2f} accept={o.overall_accept_rate:.6f} "
              f"bias_tv={o.bias_tv:.6f} z_accept={z_acc:.2f} z_output={z_out:.2f}{grid_txt} {status}",
              file=out)
        failures += bool(problems)
    verdict = "PASS" if failures == 0 else "FAIL"
    print(f"{verdict} {n_pairs - failures}/{n_pairs} pairs", file=out)
    return failures == 0


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML experiment config")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--policy", choices=["baseline", "ears", "both"])
    common.add_argument("--beta", type=float)
    common.add_argument("--gamma", type=int)
    common.add_argument("--temperature", type=float)
    common.add_argument("--lanes", type=int)

    p = argparse.ArgumentParser(prog="ears", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="baseline vs EARS on one workload")
    sw = sub.add_parser("sweep", parents=[common], help="CSV table over one parameter axis")
    sw.add_argument("--axis", choices=SWEEP_AXES)
    sw.add_argument("--grid", help="comma-separated grid values")
    oc = sub.add_parser("oracle-check", help="oracle invariant suite on random pairs")
    oc.add_argument("--seed", type=int, default=0)
    oc.add_argument("--n-pairs", type=int, default=100)
    oc.add_argument("--vocab-size", type=int, default=32)
    oc.add_argument("--trials", type=int, default=200_000)
    oc.add_argument("--grid-pairs", type=int, default=20)
    oc.add_argument("--out", help="transcript path (default stdout)")
    return p


def _overrides(args) -> dict:
    policies = None
    if args.policy:
        policies = list(POLICIES) if args.policy == "both" else [args.policy]
    return {"seed": args.seed, "beta": args.beta, "gamma": args.gamma,
            "temperature": args.temperature, "batch_lanes": args.lanes, "policies": policies}


def _parse_grid(text, axis):
    try:
        return [int(v) if axis == "gamma" else float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"field 'grid': {exc}") from exc


def _write(text: str, path):
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        if args.command == "oracle-check":
            if args.n_pairs < 1:
                print("error: --n-pairs must be >= 1", file=sys.stderr)
                return 2
            t0 = time.perf_counter()
            buf = io.StringIO()
            ok = oracle_check(args.seed, args.n_pairs, args.vocab_size, args.trials, args.grid_pairs, buf)
            _write(buf.getvalue(), args.out)
            print(f"elapsed {time.perf_counter() - t0:.1f}s", file=sys.stderr)
            return 0 if ok else 1
        cfg = load_config(args.config, _overrides(args))
        if args.command == "simulate":
            _write(dump_report(simulate(cfg)), args.out)
        else:
            axis = args.axis or cfg.sweep_axis
            grid = _parse_grid(args.grid, axis) if args.grid else (
                cfg.sweep_grid if axis == cfg.sweep_axis else None)
            if grid is None:
                raise ConfigError(f"no grid given for axis {axis!r}")
            _write(dump_csv(sweep(cfg, axis, grid)), args.out)
        return 0
    except ConfigError as exc:
        print(f"config error:\n{exc}", file=sys.stderr)
        return 2
    except (EarsError, OSError, ArithmeticError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
